import logging
from typing import Any, Callable, Iterable, List

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

logger = logging.getLogger(__name__)

# Stream tags keep the seed families of different consumers apart.
STREAM_FOLDS = 1
STREAM_BOOTSTRAP = 2
STREAM_REPLICATE = 3
STREAM_SIMULATION = 4


def derive_rng(seed: int, *counters: int) -> np.random.Generator:
    """Counter-based generator: the stream depends only on (seed, counters)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(c) for c in counters))
    return np.random.default_rng(sequence)


def derive_seed(seed: int, *counters: int) -> int:
    """A 63-bit child seed for code that takes an integer seed."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(c) for c in counters))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def run_jobs(
    func: Callable[..., Any],
    jobs: Iterable[tuple],
    n_jobs: int = 1,
    description: str = "jobs",
    progress: bool = False,
) -> List[Any]:
    """Run func(*job) for every job; results come back in submission order."""
    jobs = list(jobs)
    logger.info(f"Running {len(jobs)} {description} on {n_jobs} worker(s)")
    iterator = tqdm(jobs, desc=description, disable=not progress, leave=False)

    if n_jobs == 1:
        return [func(*job) for job in iterator]
    return Parallel(n_jobs=n_jobs)(delayed(func)(*job) for job in iterator)
