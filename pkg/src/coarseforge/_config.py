import os

_threads = None


def set_threads(n):
    """Override the worker count for parallel kernels (None restores the default)."""
    global _threads
    if n is not None and int(n) < 1:
        raise ValueError("thread count must be positive")
    _threads = None if n is None else int(n)


def get_threads():
    if _threads is not None:
        return _threads
    env = os.environ.get("COARSEFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
