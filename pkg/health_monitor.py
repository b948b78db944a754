"""
health_monitor.py
Runtime statistics for numerical runs and worker pool sizing
"""

import os
import threading
import psutil
from datetime import datetime
from typing import Dict
from config import config


def worker_count() -> int:
    """
    Number of worker threads for independent solves

    FLOQUET_AP_THREADS caps the count; otherwise the physical core count is used.
    """
    if config.FLOQUET_AP_THREADS:
        return max(1, int(config.FLOQUET_AP_THREADS))
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, cores)


class HealthMonitor:
    """Count numerical work and report process resource usage"""

    def __init__(self):
        self.start_time = datetime.now()
        self._lock = threading.Lock()
        self.propagations = 0
        self.eigensolves = 0
        self.solves = 0
        self.error_count = 0

    def _bump(self, name: str, amount: int = 1):
        with self._lock:
            setattr(self, name, getattr(self, name) + amount)

    def increment_propagations(self, amount: int = 1):
        """Increment propagation counter (one per integrated column)"""
        self._bump("propagations", amount)

    def increment_eigensolves(self):
        self._bump("eigensolves")

    def increment_solves(self):
        self._bump("solves")

    def increment_errors(self):
        self._bump("error_count")

    def reset(self):
        with self._lock:
            self.start_time = datetime.now()
            self.propagations = 0
            self.eigensolves = 0
            self.solves = 0
            self.error_count = 0

    def get_uptime(self) -> Dict:
        """Get time since the monitor started"""
        uptime = datetime.now() - self.start_time
        return {
            "started_at": self.start_time.isoformat(),
            "uptime_seconds": round(uptime.total_seconds(), 3),
        }

    def get_system_metrics(self) -> Dict:
        """Get process and system resource usage"""
        process = psutil.Process(os.getpid())
        return {
            "process_rss_mb": process.memory_info().rss / (1024 * 1024),
            "memory_percent": psutil.virtual_memory().percent,
            "cpu_count": psutil.cpu_count(),
            "workers": worker_count(),
        }

    def get_work_stats(self) -> Dict:
        return {
            "propagations": self.propagations,
            "eigensolves": self.eigensolves,
            "solves": self.solves,
            "errors": self.error_count,
        }

    def get_complete_health(self) -> Dict:
        """Get complete runtime report"""
        return {
            "timestamp": datetime.now().isoformat(),
            "environment": config.ENVIRONMENT,
            "version": config.APP_VERSION,
            "uptime": self.get_uptime(),
            "system": self.get_system_metrics(),
            "work": self.get_work_stats(),
        }


# Create global monitor instance
health_monitor = HealthMonitor()


if __name__ == "__main__":
    health_monitor.increment_propagations(33)
    health_monitor.increment_eigensolves()
    print(health_monitor.get_complete_health())
