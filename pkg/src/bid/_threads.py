import os

import numba

ENV_VAR = "BID_NUM_THREADS"


def configure_threads(n=None):
    """Set the number of numba worker threads, returning the value applied.

    ``n`` falls back to ``$BID_NUM_THREADS``; values above the numba pool
    size (``NUMBA_NUM_THREADS``) are clamped.
    """
    if n is None:
        env = os.environ.get(ENV_VAR)
        if not env:
            return numba.get_num_threads()
        n = int(env)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    n = min(n, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n
