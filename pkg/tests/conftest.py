import os
from pathlib import Path

import pytest


def _find(env_var, candidates):
    p = os.environ.get(env_var)
    if p and Path(p).exists():
        return Path(p)
    for c in candidates:
        if Path(c).exists():
            return Path(c)
    return None


MNIST_IMAGES = _find("SALAB_MNIST_IMAGES",
                     ["data/train-images-idx3-ubyte", "data/train-images-idx3-ubyte.gz",
                      "data/train-images.idx3-ubyte"])
MNIST_LABELS = _find("SALAB_MNIST_LABELS",
                     ["data/train-labels-idx1-ubyte", "data/train-labels-idx1-ubyte.gz",
                      "data/train-labels.idx1-ubyte"])
PF00076 = _find("SALAB_PF00076",
                ["data/PF00076.sto", "data/PF00076.stockholm", "data/PF00076_seed.txt"])

needs_mnist = pytest.mark.skipif(
    MNIST_IMAGES is None or MNIST_LABELS is None,
    reason="MNIST IDX files not found (set SALAB_MNIST_IMAGES / SALAB_MNIST_LABELS "
           "or place them under data/)")
needs_pfam = pytest.mark.skipif(
    PF00076 is None,
    reason="PF00076 Stockholm seed not found (set SALAB_PF00076 or place it under "
           "data/)")


@pytest.fixture(scope="session")
def mnist_paths():
    if MNIST_IMAGES is None or MNIST_LABELS is None:
        pytest.skip("MNIST files not available")
    return MNIST_IMAGES, MNIST_LABELS


@pytest.fixture(scope="session")
def pfam_path():
    if PF00076 is None:
        pytest.skip("PF00076 file not available")
    return PF00076
