import pytest

from offsim.config import (Expr, env_overrides, load_calibration, load_config,
                           make_platform)
from offsim.kernels import PartitionError
from offsim.mcast import ConfigError

PLATFORM = """
n_quadrants = 2
clusters_per_quadrant = 2
phase_a_cost = 42

[kernels.copy2]
sizes = ["N"]
arg_bytes = 16
operand_transfers = ["N // n * 8"]
compute_cycles = "10 + N / n"
result_bytes = "N // n * 8"
partition = "N % n == 0"
"""


def write(tmp_path, text, name="platform.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_config_splits_keys(tmp_path):
    topo, calib, kernels = load_config(write(tmp_path, PLATFORM))
    assert topo == {"n_quadrants": 2, "clusters_per_quadrant": 2}
    assert calib == {"phase_a_cost": 42}
    assert set(kernels) == {"copy2"}


def test_custom_kernel_costs(tmp_path):
    _, _, kernels = load_config(write(tmp_path, PLATFORM))
    k = kernels["copy2"]
    assert k.operand_transfers(2, {"N": 64}) == (256,)
    assert k.compute_cycles(2, {"N": 64}) == 42.0
    assert k.result_bytes_out(4, {"N": 64}) == 128
    k.check_partition(2, {"N": 64})
    with pytest.raises(PartitionError):
        k.check_partition(3, {"N": 64})


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigError, match="nonsense_key"):
        load_config(write(tmp_path, "nonsense_key = 1\n"))


def test_kernel_table_validation(tmp_path):
    with pytest.raises(ConfigError, match="missing key"):
        load_config(write(tmp_path, '[kernels.k]\nsizes = ["N"]\n'))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write(tmp_path, """
[kernels.k]
sizes = ["N"]
arg_bytes = 8
operand_transfers = ["N"]
compute_cycles = "N"
result_bytes = "N"
bogus = 1
"""))


def test_bad_toml_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(write(tmp_path, "= broken ="))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.toml"))


def test_non_integer_field_rejected(tmp_path):
    with pytest.raises(ConfigError, match="phase_a_cost"):
        load_config(write(tmp_path, 'phase_a_cost = "fast"\n'))
    with pytest.raises(ConfigError, match="n_quadrants"):
        load_config(write(tmp_path, "n_quadrants = true\n"))


def test_calibration_overlay(tmp_path):
    path = write(tmp_path, "dma_round_trip = 60\n", "calib.toml")
    assert load_calibration(path) == {"dma_round_trip": 60}
    with pytest.raises(ConfigError, match="n_quadrants"):
        load_calibration(write(tmp_path, "n_quadrants = 4\n", "c2.toml"))


def test_env_overrides():
    env = {"OFFSIM_CALIB_PHASE_A_COST": "100",
           "OFFSIM_CALIB_DMA_ROUND_TRIP": "0x40",
           "UNRELATED": "1"}
    assert env_overrides(env) == {"phase_a_cost": 100, "dma_round_trip": 64}
    with pytest.raises(ConfigError, match="OFFSIM_CALIB_BOGUS"):
        env_overrides({"OFFSIM_CALIB_BOGUS": "1"})
    with pytest.raises(ConfigError, match="integer"):
        env_overrides({"OFFSIM_CALIB_PHASE_A_COST": "soon"})


def test_layering_precedence(tmp_path):
    cfg = write(tmp_path, "phase_a_cost = 10\ndma_round_trip = 11\n")
    cal = write(tmp_path, "phase_a_cost = 20\n", "calib.toml")
    env = {"OFFSIM_CALIB_PHASE_A_COST": "30"}
    topo, calib, _ = make_platform(cfg, cal, environ=env)
    assert calib.phase_a_cost == 30       # env beats calibration file
    assert calib.dma_round_trip == 11     # config file beats defaults
    assert topo.n_quadrants == 8          # untouched default
    _, calib2, _ = make_platform(cfg, cal, environ={})
    assert calib2.phase_a_cost == 20      # calibration file beats config


def test_make_platform_defaults():
    topo, calib, kernels = make_platform(environ={})
    assert topo.total_clusters == 32
    assert calib.dma_round_trip == 55
    assert kernels == {}


def test_invalid_combination_reported_as_config_error(tmp_path):
    cfg = write(tmp_path, "cluster_stride_bytes = 65536\n")  # < tcdm_bytes
    with pytest.raises(ConfigError, match="cluster_stride_bytes"):
        make_platform(cfg, environ={})


def test_expr_arithmetic_and_guards():
    e = Expr("55 + 147 * N / (100 * 8 * n)", ["n", "N"])
    assert e(n=1, N=800) == pytest.approx(202.0)
    assert Expr("N % n == 0", ["n", "N"])(n=4, N=64) is True
    assert Expr("n > 1 and N > 1", ["n", "N"])(n=1, N=4) is False
    assert Expr("1 < 2 < 3", [])() is True


@pytest.mark.parametrize("text", [
    "__import__('os').system('true')",   # calls
    "().__class__",                       # attributes
    "x[0]",                               # subscripts
    "'str'",                              # non-numeric constant
    "lambda: 1",
    "N if n else 0",
])
def test_expr_rejects_non_arithmetic(text):
    with pytest.raises(ConfigError):
        Expr(text, ["n", "N", "x"])


def test_expr_unknown_variable_named():
    with pytest.raises(ConfigError, match="'M'"):
        Expr("M * 2", ["n", "N"])


def test_expr_fractional_byte_counts_rejected(tmp_path):
    _, _, kernels = load_config(write(tmp_path, """
[kernels.odd]
sizes = ["N"]
arg_bytes = 8
operand_transfers = ["N / 3"]
compute_cycles = "N"
result_bytes = "N"
"""))
    with pytest.raises(ConfigError, match="whole"):
        kernels["odd"].operand_transfers(1, {"N": 4})
    assert kernels["odd"].operand_transfers(1, {"N": 6}) == (2,)
