"""
logger.py
Run logging for the floquet-ap commands
"""

import logging
import sys
from typing import Dict, Iterable, Optional

from config import config

RUN_FORMAT = '%(asctime)s [%(levelname)s] floquet-ap: %(message)s'
TRACE_FORMAT = '%(asctime)s [%(levelname)s] %(module)s.%(funcName)s:%(lineno)d: %(message)s'


def setup_logger(name: str = "floquet_ap", level: Optional[str] = None) -> logging.Logger:
    """
    Run logger writing to stdout, plus floquet_ap.log in production

    Args:
        name: Logger name
        level: Level name overriding LOG_LEVEL

    Returns:
        Configured logger
    """
    level = getattr(logging, (level or config.LOG_LEVEL).upper())

    run_logger = logging.getLogger(name)
    run_logger.setLevel(level)
    run_logger.handlers = []
    run_logger.propagate = False

    # DEBUG_MODE traces each record back to the numerical routine that emitted it
    formatter = logging.Formatter(TRACE_FORMAT if config.DEBUG_MODE else RUN_FORMAT,
                                  datefmt='%H:%M:%S')

    stdout_handler = logging.StreamHandler(sys.stdout)
    stdout_handler.setLevel(level)
    stdout_handler.setFormatter(formatter)
    run_logger.addHandler(stdout_handler)

    if config.is_production():
        run_file = logging.FileHandler('floquet_ap.log')
        run_file.setFormatter(formatter)
        run_logger.addHandler(run_file)

    return run_logger


logger = setup_logger()


def log_run_start(command: str, model: str = None):
    logger.info(f"{command}: start" + (f" on {model}" if model else ""))


def log_run_complete(command: str, model: str = None, duration_seconds: float = 0.0):
    suffix = f" on {model}" if model else ""
    logger.info(f"{command}: done{suffix} in {duration_seconds:.2f}s")


def log_artifacts(out_dir, names: Iterable[str]):
    logger.info(f"Wrote {', '.join(sorted(names))} to {out_dir}")


def log_runtime(report: Dict):
    """Log the runtime summary built by HealthMonitor.get_complete_health"""
    work, system = report["work"], report["system"]
    logger.info(f"Runtime: {report['uptime']['uptime_seconds']:.1f}s | {work['propagations']} propagations, "
                f"{work['eigensolves']} eigensolves, {work['solves']} solves, {work['errors']} errors | "
                f"{system['process_rss_mb']:.0f} MB RSS, {system['workers']} workers")


def log_error(error: Exception, command: str = ""):
    """Log a failed command with the exception type"""
    logger.error(f"{command}: {type(error).__name__}: {error}")


if __name__ == "__main__":
    log_run_start("spectrum", "models/decay.json")
    log_artifacts("out", ["spectrum.json"])
    log_runtime({"uptime": {"uptime_seconds": 0.4},
                 "work": {"propagations": 33, "eigensolves": 2, "solves": 0, "errors": 0},
                 "system": {"process_rss_mb": 80.0, "workers": 4}})
    log_run_complete("spectrum", "models/decay.json", 0.4)
