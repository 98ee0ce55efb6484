"""Configuration loading: platform files, calibration overlays, env overrides.

One TOML file describes a platform. Topology and calibration fields appear
as flat top-level keys (every dataclass field name is a valid key); custom
kernels live in ``[kernels.<name>]`` tables whose cost fields are
polynomial expressions in ``n`` and the kernel's size names. Unknown keys
are rejected by name rather than ignored, so typos cannot silently leave a
default in place.

Layering, lowest to highest precedence:
defaults < --config file < --calibration file < OFFSIM_CALIB_* environment.
"""

from __future__ import annotations

import ast
import dataclasses
import operator
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .kernels import KernelSpec, generic_spec
from .mcast import ConfigError
from .topology import CalibrationConstants, Topology

ENV_PREFIX = "OFFSIM_CALIB_"

TOPOLOGY_KEYS = frozenset(f.name for f in dataclasses.fields(Topology))
CALIBRATION_KEYS = frozenset(f.name for f in dataclasses.fields(CalibrationConstants))


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
    ast.Pow: operator.pow,
}
_CMPOPS = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


class Expr:
    """A compiled cost expression over named non-negative integers.

    Only arithmetic, comparisons, and/or, and the declared variable names
    are allowed; anything else (calls, attributes, subscripts, strings) is
    rejected at load time so configuration files cannot execute code.
    """

    def __init__(self, text: str, allowed_names):
        self.text = text
        self.allowed = frozenset(allowed_names)
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as e:
            raise ConfigError(f"bad expression {text!r}: {e}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node) -> None:
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError(
                    f"expression {self.text!r}: only numeric constants allowed, "
                    f"got {node.value!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.allowed:
                raise ConfigError(
                    f"expression {self.text!r}: unknown variable {node.id!r} "
                    f"(allowed: {sorted(self.allowed)})")
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            self._check(node.operand)
        elif isinstance(node, ast.Compare):
            if not all(type(op) in _CMPOPS for op in node.ops):
                raise ConfigError(f"expression {self.text!r}: comparison not allowed")
            self._check(node.left)
            for c in node.comparators:
                self._check(c)
        elif isinstance(node, ast.BoolOp):
            for v in node.values:
                self._check(v)
        else:
            raise ConfigError(
                f"expression {self.text!r}: {type(node).__name__} not allowed")

    def _eval(self, node, names):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return names[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, names),
                                          self._eval(node.right, names))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, names)
            return -v if isinstance(node.op, ast.USub) else +v
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, names)
            for op, comp in zip(node.ops, node.comparators):
                right = self._eval(comp, names)
                if not _CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                return all(self._eval(v, names) for v in node.values)
            return any(self._eval(v, names) for v in node.values)
        raise AssertionError(f"unreachable node {type(node).__name__}")

    def __call__(self, **names):
        return self._eval(self._tree, names)


def _expect_int(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key {key!r} must be an integer, got {value!r}")
    return value


def _int_bytes(expr: Expr, value) -> int:
    if abs(value - round(value)) > 1e-9 or value < 0:
        raise ConfigError(
            f"expression {expr.text!r} must yield a non-negative whole "
            f"byte count, got {value}")
    return int(round(value))


_KERNEL_TABLE_KEYS = frozenset(
    ("sizes", "arg_bytes", "operand_transfers", "compute_cycles",
     "result_bytes", "partition"))


def _kernel_from_table(name: str, table) -> KernelSpec:
    if not isinstance(table, dict):
        raise ConfigError(f"[kernels.{name}] must be a table")
    unknown = set(table) - _KERNEL_TABLE_KEYS
    if unknown:
        raise ConfigError(
            f"[kernels.{name}]: unknown key {sorted(unknown)[0]!r}")
    missing = _KERNEL_TABLE_KEYS - {"partition"} - set(table)
    if missing:
        raise ConfigError(
            f"[kernels.{name}]: missing key {sorted(missing)[0]!r}")
    sizes = table["sizes"]
    if (not isinstance(sizes, list) or not sizes
            or not all(isinstance(s, str) and s.isidentifier() for s in sizes)):
        raise ConfigError(f"[kernels.{name}]: sizes must be a list of names")
    allowed = ["n"] + list(sizes)
    raw = table["operand_transfers"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(
            f"[kernels.{name}]: operand_transfers must be a non-empty list")
    txs = [Expr(t, allowed) for t in raw]
    compute = Expr(table["compute_cycles"], allowed)
    result = Expr(table["result_bytes"], allowed)
    partition = (Expr(table["partition"], allowed)
                 if "partition" in table else None)

    def transfers_fn(n, p):
        return tuple(_int_bytes(t, t(n=n, **{s: p[s] for s in sizes}))
                     for t in txs)

    def compute_fn(n, p):
        return float(compute(n=n, **{s: p[s] for s in sizes}))

    def result_fn(n, p):
        return _int_bytes(result, result(n=n, **{s: p[s] for s in sizes}))

    check_fn = None
    if partition is not None:
        check_fn = lambda n, p: bool(partition(n=n, **{s: p[s] for s in sizes}))

    return generic_spec(
        name=name,
        size_names=sizes,
        arg_bytes=_expect_int(f"kernels.{name}.arg_bytes", table["arg_bytes"]),
        transfers=transfers_fn,
        compute=compute_fn,
        result=result_fn,
        check=check_fn,
        partition_rule=table.get("partition", "no constraint"),
    )


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read configuration file {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None


def load_config(path: str):
    """Read one platform file -> (topology kwargs, calibration kwargs, kernels)."""
    data = _load_toml(path)
    topo, calib, kernels = {}, {}, {}
    for key, value in data.items():
        if key == "kernels":
            if not isinstance(value, dict):
                raise ConfigError("kernels must be a table of tables")
            for kname, ktable in value.items():
                kernels[kname] = _kernel_from_table(kname, ktable)
        elif key in TOPOLOGY_KEYS:
            topo[key] = _expect_int(key, value)
        elif key in CALIBRATION_KEYS:
            calib[key] = _expect_int(key, value)
        else:
            raise ConfigError(f"unknown configuration key: {key!r}")
    return topo, calib, kernels


def load_calibration(path: str) -> dict:
    """Read a calibration-only overlay file (flat calibration keys)."""
    data = _load_toml(path)
    out = {}
    for key, value in data.items():
        if key not in CALIBRATION_KEYS:
            raise ConfigError(f"unknown calibration key: {key!r}")
        out[key] = _expect_int(key, value)
    return out


def env_overrides(environ=None) -> dict:
    """Collect OFFSIM_CALIB_* overrides from the environment."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in CALIBRATION_KEYS:
            raise ConfigError(f"unknown calibration key in environment: {name}")
        try:
            out[key] = int(value, 0)
        except ValueError:
            raise ConfigError(
                f"{name} must be an integer, got {value!r}") from None
    return out


def make_platform(config_path=None, calibration_path=None, environ=None):
    """Layer all sources -> (Topology, CalibrationConstants, custom kernels)."""
    topo_kwargs, calib_kwargs, kernels = {}, {}, {}
    if config_path is not None:
        topo_kwargs, calib_kwargs, kernels = load_config(config_path)
    if calibration_path is not None:
        calib_kwargs.update(load_calibration(calibration_path))
    calib_kwargs.update(env_overrides(environ))
    try:
        topo = Topology(**topo_kwargs)
        calib = CalibrationConstants(**calib_kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return topo, calib, kernels
