"""
Timing utilities.
"""

import sys
import time


class Timer:
    """
    Context manager that measures wall-clock time of a block and, if verbose, reports
    it on stderr as a *[TIME] line. The elapsed seconds stay available afterwards.
    """

    def __init__(self, name=None, verbose=True):
        self.name = name
        self.verbose = verbose
        self.elapsed = None

    def __enter__(self):
        self.tstart = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.elapsed = time.perf_counter() - self.tstart
        if self.verbose:
            label = f' [{self.name}]' if self.name else ''
            print(f'*[TIME]{label} Elapsed: {self.elapsed:.2f} seconds', file=sys.stderr)
