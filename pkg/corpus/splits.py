import logging

import numpy as np

from core.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

SPLITS = ('train', 'val', 'test')


def split_sizes(n, val_fraction=0.1, test_fraction=0.1):
    """
    (train, val, test) counts: validation and test get their rounded share but never
    fewer than one run each.
    """

    if n < len(SPLITS):
        raise InvalidArgument(f'need at least {len(SPLITS)} runs to split, got {n}')

    n_val = max(1, int(round(val_fraction * n)))
    n_test = max(1, int(round(test_fraction * n)))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise InvalidArgument(f'{n} runs leave no training runs')

    return n_train, n_val, n_test


def split_runs(runs, seed):
    """
    Deterministic 80/10/10 partition of 'runs'. Each split keeps the input order.
    """

    runs = list(runs)
    n_train, n_val, _ = split_sizes(len(runs))
    order = np.random.default_rng(seed).permutation(len(runs))

    train = sorted(order[:n_train])
    val = sorted(order[n_train:n_train + n_val])
    test = sorted(order[n_train + n_val:])

    logger.debug('split %d runs into %d/%d/%d', len(runs), len(train), len(val), len(test))

    return [runs[i] for i in train], [runs[i] for i in val], [runs[i] for i in test]
