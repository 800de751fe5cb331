import logging


def setup_logging(log_file_path: str | None = None, level: int = logging.INFO):
    """Setup logging configuration"""
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    formatter = logging.Formatter('%(asctime)s - %(message)s')
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # avoid stacking handlers when called twice in one process
    for handler in list(root_logger.handlers):
        if getattr(handler, "name", None) in ("console_handler", "file_handler"):
            root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    console_handler.name = "console_handler"
    root_logger.addHandler(console_handler)

    if log_file_path:
        file_handler = logging.FileHandler(log_file_path, encoding='utf-8')
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        file_handler.name = "file_handler"
        root_logger.addHandler(file_handler)
