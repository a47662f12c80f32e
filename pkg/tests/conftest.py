import pytest

from bbsm import ModelParams, dump_config


@pytest.fixture
def write_config(tmp_path):
    """Factory writing a ModelParams config file and returning its path."""

    def _write(params: ModelParams, name: str = "model.cfg") -> str:
        path = tmp_path / name
        dump_config(params, str(path))
        return str(path)

    return _write
