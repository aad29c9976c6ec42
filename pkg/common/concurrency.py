"""Concurrency handling"""

import asyncio
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")


async def gather_in_threads(
    calls: Sequence[Callable[[], T]],
    threads: int = 1,
    on_done: Optional[Callable[[], None]] = None,
) -> List[T]:
    """
    Runs blocking calls in worker threads, at most `threads` at a time.

    Results come back in submission order regardless of completion order.
    The first exception cancels the remaining calls and is re-raised.
    """

    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")

    semaphore = asyncio.Semaphore(threads)

    async def run(call: Callable[[], T]) -> T:
        async with semaphore:
            result = await asyncio.to_thread(call)

        if on_done:
            on_done()

        return result

    tasks = [asyncio.create_task(run(call)) for call in calls]
    try:
        return await asyncio.gather(*tasks)
    except BaseException:
        for task in tasks:
            task.cancel()

        raise
