"""Worker pool for independent trials.

Every trial derives its own seed from the master seed and its index, so a
run gives the same results whatever the number of workers, and results are
always returned in trial order.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import TypeVar

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

T = TypeVar("T")

console = Console(stderr=True)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of trial ``index``: SeedSequence(master_seed, spawn_key=(index,))."""
    state = np.random.SeedSequence(master_seed, spawn_key=(index,)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _call(func: Callable[[int, int], T], master_seed: int, index: int) -> T:
    return func(index, derive_seed(master_seed, index))


def run_trials(
    func: Callable[[int, int], T],
    master_seed: int,
    count: int,
    *,
    workers: int = 1,
    description: str = "Running trials",
    show_progress: bool = True,
) -> list[T]:
    """Run ``func(index, seed)`` for every trial index.

    Args:
        func: Module-level callable (picklable when workers > 1)
        master_seed: Seed every trial seed is derived from
        count: Number of trials
        workers: Process count; 1 runs inline

    Returns:
        Results in trial order
    """
    indices: Sequence[int] = range(count)
    job = partial(_call, func, master_seed)
    results: list[T] = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        console=console,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task(description, total=count)
        if workers <= 1:
            for index in indices:
                results.append(job(index))
                progress.advance(task)
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                for result in executor.map(job, indices, chunksize=max(1, count // (8 * workers))):
                    results.append(result)
                    progress.advance(task)
    return results
