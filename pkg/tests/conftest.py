import pytest

from chirow.io import paths
from chirow.model.params import PhysicalParams, TightBindingParams

# 归一化单位 Ω = 1：𝓕/2π = 0.6 THz，Ω/2π = 195 THz
FSR = 0.6 / 195
GAMMA_LOSSLESS = 1.5e-5
# γ_in = 0.02·γ_ex，κ_in = 0.25i
GAMMA_IN_LOSSY = 1.9858e-6


@pytest.fixture(autouse=True)
def isolated_user_data(tmp_path, monkeypatch):
    """每个测试使用独立的用户数据目录。"""
    monkeypatch.setenv(paths.ENV_USER_DATA, str(tmp_path / "userdata"))
    paths.reset_user_data_dir()
    yield
    paths.reset_user_data_dir()


@pytest.fixture
def lossless_params():
    return PhysicalParams(fsr=FSR, Gamma=GAMMA_LOSSLESS, kappa1=0.1j, kappa2=0.1j, kappa_in=0.25j, n_cells=10)


@pytest.fixture
def lossy_params():
    return PhysicalParams(fsr=FSR, Gamma=GAMMA_LOSSLESS, kappa1=0.1j, kappa2=0.1j, kappa_in=0.25j,
                          gamma_in=GAMMA_IN_LOSSY, n_cells=10)


@pytest.fixture
def edge_tb():
    return TightBindingParams(g=1e-4, J1=3e-4, J2=6e-4, n_cells=20)
