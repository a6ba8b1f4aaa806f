"""Common predictor interface and the binary model container."""

import numpy as np

from .._binio import header_int, read_container, take, write_container
from ..errors import DimensionError, EvaluationError, HeaderError, ParseError

MODEL_MAGIC = "ROMMDL01\n"


class ClosureModel:
    """A fitted closure ``u -> (g_1(u), ..., g_r(u))``.

    Subclasses implement ``_predict`` on a 2D array of coefficient rows.
    """

    kind = "base"

    def __init__(self, r, meta=None):
        self.r = int(r)
        self.meta = dict(meta or {})

    @property
    def parameter_count(self):
        raise NotImplementedError

    def _predict(self, U):
        raise NotImplementedError

    def predict(self, u):
        """Closure prediction for one coefficient vector or for each row."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.r:
            raise DimensionError(f"model expects {self.r} coefficients, got {u.shape[-1]}")
        with np.errstate(all="ignore"):
            out = self._predict(np.atleast_2d(u))
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self.kind} closure produced non-finite values")
        return out[0] if u.ndim == 1 else out


class ZeroModel(ClosureModel):
    """``g == 0``; closing a ROM with it reproduces the Galerkin ROM."""

    kind = "zero"

    @property
    def parameter_count(self):
        return 0

    def _predict(self, U):
        return np.zeros_like(U)


def save_model(model, path):
    """Write a ridge, quadratic or MLP model as a ``ROMMDL01`` container."""
    header = {"kind": model.kind, "r": model.r}
    arrays = model.to_arrays()
    header["arrays"] = ";".join("x".join(str(d) for d in a.shape) or "0"
                                for a in arrays)
    header.update({k: v for k, v in model.header_fields().items()})
    write_container(path, MODEL_MAGIC, header, arrays)


def load_model(path):
    from .linear import QuadraticModel, RidgeModel
    from .mlp import MLPModel

    header, payload = read_container(path, MODEL_MAGIC)
    kind = header.get("kind")
    r = header_int(header, "r", path)
    shapes = []
    for spec in header.get("arrays", "").split(";"):
        if spec == "":
            continue
        shapes.append(() if spec == "0" else tuple(int(d) for d in spec.split("x")))
    arrays, off = [], 0
    for shape in shapes:
        arr, off = take(payload, off, int(np.prod(shape)), path)
        arrays.append(arr.reshape(shape))
    if off != payload.size:
        raise HeaderError(f"{path}: payload longer than header announces")
    classes = {"ridge": RidgeModel, "quadratic-tsvd": QuadraticModel, "mlp": MLPModel}
    if kind not in classes:
        raise ParseError(f"{path}: unknown model kind {kind!r}")
    return classes[kind].from_arrays(r, arrays, header)
