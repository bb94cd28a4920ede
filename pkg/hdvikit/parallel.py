# Imports: Standard Library
from multiprocessing.pool import ThreadPool
from typing import Callable, Iterable, List, Optional, TypeVar

# Imports: Third Party
from tqdm import tqdm

T = TypeVar('T')
R = TypeVar('R')


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1, progress: bool = False, desc: Optional[str] = None) -> List[R]:
    """
    Maps ``func`` over independent solves, keeping input order.

    Threads share the read-only problem objects; with ``threads=1`` the map runs
    in the calling thread.

    Args:
        func (callable): Work item function.
        items (iterable): Work items.
        threads (int, optional): Number of worker threads. Defaults to 1.
        progress (bool, optional): If True, displays a progress bar.
        desc (str, optional): Progress bar label.
    Returns:
        list: Results in the order of ``items``.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]
    with ThreadPool(min(threads, len(items))) as pool:
        return list(tqdm(pool.imap(func, items), total=len(items), desc=desc, disable=not progress))
