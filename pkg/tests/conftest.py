import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quanvolute.synthdigits import write_mnist_layout


@pytest.fixture(scope="session")
def small_data_dir(tmp_path_factory):
    """Small MNIST-layout synthetic dataset for loader and CLI tests."""
    data_dir = tmp_path_factory.mktemp("digits-small")
    write_mnist_layout(data_dir, train_n=3000, test_n=600, seed=77)
    return data_dir
