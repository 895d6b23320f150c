import os


def worker_count() -> int:
    """Thread cap from ``ICSEC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("ICSEC_THREADS", "1")))
    except ValueError:
        return 1
