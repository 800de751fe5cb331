import logging
import threading
import uuid
from typing import List, Union
from FlowEngine.utils.base_message import BaseMsg, InfoMsg, SeriesMsg, OverflowMsg, VerdictMsg, SuiteMsg
from Utils.errors import RunawayRunError


class RunLogger:
    """
    Records what a run did: a non-propagating file log, an optional console echo,
    and the typed message list that later becomes the metadata sidecar.
    """
    total_step_limit = 100000
    last_n = 15
    max_log_length = 5000

    def __init__(self, config: dict | None = None):
        config = config or {}
        self.log_items: List[Union[str, BaseMsg]] = []
        self.step_count = 0
        # evolve workers share one logger
        self._lock = threading.Lock()
        self.file_logger = None
        self.console_logger = None
        self.enable_info = config.get('enable_info', True)

        if config.get('log_path'):
            logger_name = config['log_path'].replace('\\', '/').split('/')[-1].split('.')[0]
            self.file_logger = logging.getLogger(f"run.{logger_name}")
            self.file_logger.setLevel(logging.INFO)
            file_handler = logging.FileHandler(config['log_path'], encoding='utf-8')
            file_handler.setLevel(logging.INFO)
            file_handler.name = "file_handler"
            # not propagate to root logger
            self.file_logger.propagate = False
            self.file_logger.addHandler(file_handler)

        if config.get('verbose'):
            console_handler = logging.StreamHandler()
            console_handler.setLevel(logging.INFO)
            console_handler.name = "console_handler"
            self.console_logger = logging.getLogger(f"run.{uuid.uuid4().hex}_console")
            self.console_logger.setLevel(logging.INFO)
            self.console_logger.propagate = False
            self.console_logger.addHandler(console_handler)

    def _emit(self, msg: BaseMsg):
        with self._lock:
            self.log_items.append(msg)
        if self.file_logger:
            self.file_logger.info(str(msg))
        if self.console_logger:
            self.console_logger.info(str(msg))

    def info(self, msg, stage=None):
        if not self.enable_info:
            return
        self._emit(InfoMsg(msg, stage))

    def series(self, t, terms, squarings, rate, tail_bound):
        self._emit(SeriesMsg(t, terms, squarings, rate, tail_bound))

    def overflow(self, t, saturated):
        self._emit(OverflowMsg(t, saturated))

    def verdict(self, space, symbol, verdict, reason=""):
        self._emit(VerdictMsg(space, symbol, verdict, reason))

    def suite(self, suite, passed, failed, seconds):
        self._emit(SuiteMsg(suite, passed, failed, seconds))

    def step(self):
        """
        Count one unit of work; stops runaway loops with the last few log lines attached.
        """
        with self._lock:
            self.step_count += 1
            runaway = self.step_count > self.total_step_limit
            recent = self.log_items[-self.last_n:] if runaway else []
        if runaway:
            last_n_logs = [str(item) for item in recent]
            while len(''.join(last_n_logs)) > self.max_log_length:
                last_n_logs.pop(0)
            last_logs = '\n'.join(last_n_logs)
            raise RunawayRunError(
                f'The run exceeded {self.total_step_limit} steps. Please check the configuration.\nLast few entries: \n{last_logs}')

    def metadata(self) -> dict:
        """Summary of the typed messages for the metadata sidecar."""
        series = [m for m in self.log_items if isinstance(m, SeriesMsg)]
        overflows = [m for m in self.log_items if isinstance(m, OverflowMsg)]
        verdicts = [m for m in self.log_items if isinstance(m, VerdictMsg)]
        meta = {
            "series_runs": len(series),
            "overflow_events": len(overflows),
        }
        if series:
            meta["max_terms"] = max(m.terms for m in series)
            meta["max_squarings"] = max(m.squarings for m in series)
            meta["max_tail_bound"] = max(m.tail_bound for m in series)
        if overflows:
            meta["overflow_times"] = [m.t for m in overflows]
        if verdicts:
            meta["verdicts"] = [str(m) for m in verdicts]
        return meta
