"""
JSON model specifications.

A specification is a JSON object with a ``kind`` discriminator:

``{"kind": "T1", "phi": F, "A1": M, "A2": M, "b1": x, "b2": x}``
``{"kind": "T2", "phi": F, "a1": x, "a2": x, "b1": x, "b2": x, "eta": [x, ...]}``
``{"kind": "T3", "phi1": F or model, "phi2": F, "a1": x, "a2": x, "b1": x, "b2": x, "u": [x, ...]}``
``{"kind": "geometric", "phi": F, "A": M}``
``{"kind": "axis_product", "phi1": P, "phi2": P, "axis": i, "a1": x, "a2": x, "sigma2": x, "dim": 2}``
``{"kind": "scaled", "base": model, "sigma2": x}``
``{"kind": "model_I", "sigma2": x, "a1": x, "a2": x}``
``{"kind": "model_II", "sigma2": x, "a1": x, "a2": x, "a3": x}``

Families ``F`` are a name (``"gaussian"``, ``"cardinal_sine"``) or an
object: ``{"family": "matern", "nu": x}``, ``{"family": "cauchy", "delta": x}``,
``{"family": "gauss_hypergeometric", "alpha": x, "beta": x, "gamma": x,
"dim": 2}``.  Radial profiles ``P`` also accept
``{"family": "nested", "base": F, "a1": x, "a2": x, "b1": x, "b2": x}``.

Matrices ``M`` are row-major nested lists, ``{"identity": d, "scale": c}``
or ``{"rotation": angle or [3 angles], "scales": [...]}``.

Any number may be written as ``"$name"``; such placeholders are filled
from a parameter dict, which turns a specification into a fitting
template.
"""

import json
import math

import numpy as np

from . import catalog
from .anisotropy import AnisotropyMatrix, from_rotation_scaling
from .errors import HolecovError
from .models import Cauchy, CardinalSine, Gaussian, GaussHypergeometric, IsotropicFamily, Matern
from .transforms import T1, T2, T3, AxisProduct, CovarianceModel, GeometricAniso, NestedProfile, Scaled

__all__ = [
    "ModelSpecError",
    "load_spec",
    "parse_spec",
    "build_model",
    "placeholders",
    "template",
    "model_to_spec",
]


class ModelSpecError(HolecovError, ValueError):
    """Invalid model specification; the message starts with the JSON path."""


def load_spec(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelSpecError(f"{path}: {exc.strerror}") from exc
    return parse_spec(text, source=str(path))


def parse_spec(text, source="<spec>"):
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSpecError(f"{source}, line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise ModelSpecError(f"{source}: top level must be an object")
    return spec


class _Builder:
    def __init__(self, params):
        self.params = params or {}

    def num(self, obj, key, path, default=None):
        if key not in obj:
            if default is not None:
                return default
            raise ModelSpecError(f"{path}: missing '{key}'")
        return self.value(obj[key], f"{path}.{key}")

    def value(self, v, path):
        if isinstance(v, str) and v.startswith("$"):
            name = v[1:]
            if name not in self.params:
                raise ModelSpecError(f"{path}: no value for placeholder '{v}'")
            v = self.params[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ModelSpecError(f"{path}: expected a number, got {v!r}")
        return float(v)

    def vector(self, obj, key, path):
        if key not in obj:
            raise ModelSpecError(f"{path}: missing '{key}'")
        v = obj[key]
        if not isinstance(v, list):
            raise ModelSpecError(f"{path}.{key}: expected a list")
        return tuple(self.value(x, f"{path}.{key}[{i}]") for i, x in enumerate(v))

    def matrix(self, obj, key, path):
        p = f"{path}.{key}"
        if key not in obj:
            raise ModelSpecError(f"{path}: missing '{key}'")
        m = obj[key]
        try:
            if isinstance(m, dict):
                if "identity" in m:
                    d = int(m["identity"])
                    return AnisotropyMatrix.identity(d, self.num(m, "scale", p, default=1.0))
                if "rotation" in m:
                    rot = m["rotation"]
                    angles = [self.value(a, f"{p}.rotation[{i}]") for i, a in enumerate(rot)] \
                        if isinstance(rot, list) else self.value(rot, f"{p}.rotation")
                    return from_rotation_scaling(angles, self.vector(m, "scales", p))
                raise ModelSpecError(f"{p}: matrix object needs 'identity' or 'rotation'")
            if not isinstance(m, list) or not all(isinstance(r, list) for r in m):
                raise ModelSpecError(f"{p}: expected a list of rows")
            rows = [[self.value(x, f"{p}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(m)]
            return AnisotropyMatrix(rows)
        except ModelSpecError:
            raise
        except (HolecovError, ValueError) as exc:
            raise ModelSpecError(f"{p}: {exc}") from None

    def family(self, f, path):
        if isinstance(f, str):
            f = {"family": f}
        if not isinstance(f, dict) or "family" not in f:
            raise ModelSpecError(f"{path}: expected a family name or an object with 'family'")
        name = str(f["family"]).lower()
        try:
            if name == "matern":
                return Matern(self.num(f, "nu", path))
            if name == "cauchy":
                return Cauchy(self.num(f, "delta", path))
            if name == "gaussian":
                return Gaussian()
            if name in ("cardinal_sine", "wave"):
                return CardinalSine()
            if name == "gauss_hypergeometric":
                return GaussHypergeometric(self.num(f, "alpha", path), self.num(f, "beta", path),
                                           self.num(f, "gamma", path), int(f.get("dim", 2)))
            if name == "nested":
                return NestedProfile(self.family(f.get("base"), f"{path}.base"),
                                     self.num(f, "a1", path), self.num(f, "a2", path),
                                     self.num(f, "b1", path), self.num(f, "b2", path))
        except ModelSpecError:
            raise
        except (HolecovError, ValueError) as exc:
            raise ModelSpecError(f"{path}: {exc}") from None
        raise ModelSpecError(f"{path}: unknown family '{f['family']}'")

    def model(self, s, path="$"):
        if not isinstance(s, dict):
            raise ModelSpecError(f"{path}: expected an object")
        if "kind" not in s:
            raise ModelSpecError(f"{path}: missing 'kind'")
        kind = s["kind"]
        n = lambda k, default=None: self.num(s, k, path, default)  # noqa: E731
        try:
            if kind == "T1":
                return T1(self.family(s.get("phi"), f"{path}.phi"), self.matrix(s, "A1", path),
                          self.matrix(s, "A2", path), n("b1"), n("b2"))
            if kind == "T2":
                return T2(self.family(s.get("phi"), f"{path}.phi"), n("a1"), n("a2"), n("b1"), n("b2"),
                          self.vector(s, "eta", path))
            if kind == "T3":
                p1 = s.get("phi1")
                phi1 = self.model(p1, f"{path}.phi1") if isinstance(p1, dict) and "kind" in p1 \
                    else self.family(p1, f"{path}.phi1")
                return T3(phi1, self.family(s.get("phi2"), f"{path}.phi2"), n("a1"), n("a2"),
                          n("b1"), n("b2"), self.vector(s, "u", path))
            if kind == "geometric":
                return GeometricAniso(self.family(s.get("phi"), f"{path}.phi"), self.matrix(s, "A", path))
            if kind == "axis_product":
                return AxisProduct(self.family(s.get("phi1"), f"{path}.phi1"),
                                   self.family(s.get("phi2"), f"{path}.phi2"),
                                   int(s.get("axis", 1)), n("a1"), n("a2"), n("sigma2", 1.0),
                                   int(s.get("dim", 2)))
            if kind == "scaled":
                return Scaled(self.model(s.get("base"), f"{path}.base"), n("sigma2"))
            if kind == "model_I":
                return catalog.model_I(n("sigma2"), n("a1"), n("a2"))
            if kind == "model_II":
                return catalog.model_II(n("sigma2"), n("a1"), n("a2"), n("a3"))
        except ModelSpecError:
            raise
        except (HolecovError, ValueError) as exc:
            raise ModelSpecError(f"{path}: {exc}") from None
        raise ModelSpecError(f"{path}.kind: unknown kind {kind!r}")


def build_model(spec, params=None):
    """Build a :class:`CovarianceModel` from a parsed specification."""
    return _Builder(params).model(spec)


def placeholders(spec):
    """Sorted names of the ``"$name"`` placeholders in a specification."""
    found = set()

    def walk(o):
        if isinstance(o, dict):
            for v in o.values():
                walk(v)
        elif isinstance(o, list):
            for v in o:
                walk(v)
        elif isinstance(o, str) and o.startswith("$") and len(o) > 1:
            found.add(o[1:])

    walk(spec)
    return sorted(found)


def template(spec):
    """Callable ``params -> model`` for use with :func:`holecov.inference.fit`."""
    return lambda params: build_model(spec, params)


def _family_to_spec(f):
    if isinstance(f, NestedProfile):
        return {"family": "nested", "base": _family_to_spec(f.family),
                "a1": f.a1, "a2": f.a2, "b1": f.b1, "b2": f.b2}
    if isinstance(f, Matern):
        return {"family": "matern", "nu": f.nu}
    if isinstance(f, Cauchy):
        return {"family": "cauchy", "delta": f.delta}
    if isinstance(f, Gaussian):
        return {"family": "gaussian"}
    if isinstance(f, CardinalSine):
        return {"family": "cardinal_sine"}
    if isinstance(f, GaussHypergeometric):
        return {"family": "gauss_hypergeometric", "alpha": f.alpha, "beta": f.beta,
                "gamma": f.gamma, "dim": f.dim}
    raise ModelSpecError(f"cannot serialize {f!r}")


def model_to_spec(m):
    """Inverse of :func:`build_model` (matrices are written row-major)."""
    if isinstance(m, IsotropicFamily) or isinstance(m, NestedProfile):
        return _family_to_spec(m)
    if isinstance(m, T1):
        return {"kind": "T1", "phi": _family_to_spec(m.phi), "A1": m.A1.tolist(),
                "A2": m.A2.tolist(), "b1": m.b1, "b2": m.b2}
    if isinstance(m, T2):
        return {"kind": "T2", "phi": _family_to_spec(m.phi), "a1": m.a1, "a2": m.a2,
                "b1": m.b1, "b2": m.b2, "eta": list(m.eta)}
    if isinstance(m, T3):
        return {"kind": "T3", "phi1": model_to_spec(m.phi1), "phi2": _family_to_spec(m.phi2),
                "a1": m.a1, "a2": m.a2, "b1": m.b1, "b2": m.b2, "u": list(m.u)}
    if isinstance(m, GeometricAniso):
        return {"kind": "geometric", "phi": _family_to_spec(m.phi), "A": m.A.tolist()}
    if isinstance(m, AxisProduct):
        return {"kind": "axis_product", "phi1": _family_to_spec(m.phi1),
                "phi2": _family_to_spec(m.phi2), "axis": m.axis, "a1": m.a1, "a2": m.a2,
                "sigma2": m.sigma2, "dim": m.ndim}
    if isinstance(m, Scaled):
        return {"kind": "scaled", "base": model_to_spec(m.base), "sigma2": m.sigma2}
    if isinstance(m, CovarianceModel):
        raise ModelSpecError(f"cannot serialize model kind {m.kind!r}")
    raise ModelSpecError(f"cannot serialize {m!r}")


def _finite(x):
    return isinstance(x, (int, float)) and math.isfinite(x)


def as_json(obj):
    """JSON text with numpy scalars and arrays converted."""
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        raise TypeError(f"not JSON serializable: {type(o).__name__}")
    return json.dumps(obj, indent=2, default=default, allow_nan=True)
