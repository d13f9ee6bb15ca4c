import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)


def replica_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replica `index` of a run seeded with `seed`"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


class ReplicaBatchProcessor:
    def __init__(self, description: str = "Simulating replicas"):
        self.description = description
        self.is_processing = False

    def process_batch(self, task: Callable[[np.random.Generator, int], Any], replicas: int,
                      seed: int, progress_callback: Optional[Callable] = None,
                      show_progress: bool = True) -> List[Any]:
        """Run task(rng, index) for every replica, results in replica order"""
        self.is_processing = True
        results = []

        if progress_callback:
            progress_callback({
                'status': 'started',
                'total': replicas,
                'processed': 0
            })

        for index in tqdm(range(replicas), desc=self.description, disable=not show_progress):
            # Check if processing should stop
            if not self.is_processing:
                logger.warning(f"Processing stopped after {index} of {replicas} replicas")
                break

            results.append(task(replica_rng(seed, index), index))

            if progress_callback:
                progress_callback({
                    'status': 'processing',
                    'total': replicas,
                    'processed': index + 1,
                    'progress': (index + 1) / replicas * 100
                })

        self.is_processing = False

        if progress_callback:
            progress_callback({
                'status': 'completed',
                'total': replicas,
                'processed': len(results)
            })

        return results

    def stop(self):
        self.is_processing = False


def summarize(values: List[float]) -> Dict[str, float]:
    """Mean, standard error and count of a replica sample"""
    sample = np.asarray(values, dtype=float)
    count = len(sample)
    mean = float(sample.mean()) if count else float('nan')
    se = float(sample.std(ddof=1) / np.sqrt(count)) if count > 1 else 0.0
    return {'mean': mean, 'se': se, 'count': count}
