class BaseMsg:
    def __init__(self, msg):
        self.msg = msg

    def __repr__(self):
        return self.msg

    def __str__(self):
        return self.msg

class InfoMsg(BaseMsg):
    def __init__(self, msg, stage=None):
        self.msg = msg
        self.stage = stage

class SeriesMsg(BaseMsg):
    def __init__(self, t: float, terms: int, squarings: int, rate: float, tail_bound: float):
        self.msg = (f"Series for t={t:g}: {terms} terms, {squarings} squarings, "
                    f"rate {rate:.6g}, certified tail {tail_bound:.3e}")
        self.t = t
        self.terms = terms
        self.squarings = squarings
        self.rate = rate
        self.tail_bound = tail_bound

class OverflowMsg(BaseMsg):
    def __init__(self, t: float, saturated: int):
        self.msg = f"Overflow at t={t:g}: {saturated} saturated node(s)"
        self.t = t
        self.saturated = saturated

class VerdictMsg(BaseMsg):
    def __init__(self, space: str, symbol: str, verdict: str, reason: str = ""):
        self.msg = f"{space} verdict for {symbol}: {verdict}" + (f" ({reason})" if reason else "")
        self.space = space
        self.symbol = symbol
        self.verdict = verdict
        self.reason = reason

class SuiteMsg(BaseMsg):
    def __init__(self, suite: str, passed: int, failed: int, seconds: float):
        status = "PASS" if failed == 0 else "FAIL"
        self.msg = f"[{status}] {suite}: {passed} passed, {failed} failed in {seconds:.2f}s"
        self.suite = suite
        self.passed = passed
        self.failed = failed
        self.seconds = seconds
