"""Lossless JSON model files.

Every float is written with ``float.hex`` so a load reproduces the saved
model bit for bit. Matrices are nested row-major lists. A file may carry the
standardization a model was trained under, so ``predict`` can apply it to raw
inputs.
"""
import json

import numpy as np

from .base_learner import BaseLearner
from .boosting import Ensemble
from .data import Scaler
from .pbrff import PbrffModel
from .rff import RffSet, SimplexWeights

GBRFF_FORMAT = "gbrff-model-v1"
PBRFF_FORMAT = "pbrff-model-v1"


class ModelFormatError(ValueError):
    pass


def _enc(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return float(a).hex()
    return [_enc(row) for row in a]


def _dec(v):
    if isinstance(v, list):
        return np.array([_dec(x) for x in v], dtype=float) if v else np.zeros(0)
    return float.fromhex(v)


def _rff(rff):
    return {"omegas": _enc(rff.omegas), "seed": rff.seed, "bandwidth": _enc(rff.bandwidth)}


def _unrff(d):
    return RffSet(np.atleast_2d(_dec(d["omegas"])), seed=int(d["seed"]), bandwidth=_dec(d["bandwidth"]))


def _scaler(scaler):
    if scaler is None:
        return None
    return {"mean": _enc(scaler.mean), "scale": _enc(scaler.scale)}


def _unscaler(d):
    return None if d is None else Scaler(_dec(d["mean"]), _dec(d["scale"]))


def ensemble_to_dict(ens, scaler=None):
    return {
        "format": GBRFF_FORMAT,
        "h0": _enc(ens.h0),
        "v": _enc(ens.v),
        "skipped": ens.skipped,
        "rounds": [{"alpha": _enc(alpha), "landmark": _enc(l.landmark), "rff": _rff(l.rff), "q": _enc(l.q.q)}
                   for alpha, l in ens.rounds],
        "standardization": _scaler(scaler),
    }


def ensemble_from_dict(d):
    rounds = tuple((_dec(r["alpha"]), BaseLearner(_dec(r["landmark"]), _unrff(r["rff"]), SimplexWeights(_dec(r["q"]))))
                   for r in d["rounds"])
    return Ensemble(h0=_dec(d["h0"]), v=_dec(d["v"]), rounds=rounds, skipped=int(d.get("skipped", 0)))


def pbrff_to_dict(model, scaler=None):
    return {
        "format": PBRFF_FORMAT,
        "landmarks": [{"point": _enc(p), "label": int(y), "rff": _rff(rff), "q": _enc(q.q)}
                      for (p, y), (rff, q) in zip(model.landmarks, model.per_landmark)],
        "linear": {"weights": _enc(model.weights), "bias": _enc(model.bias)},
        "standardization": _scaler(scaler),
    }


def pbrff_from_dict(d):
    landmarks = tuple((_dec(l["point"]), int(l["label"])) for l in d["landmarks"])
    per = tuple((_unrff(l["rff"]), SimplexWeights(_dec(l["q"]))) for l in d["landmarks"])
    return PbrffModel(landmarks, per, _dec(d["linear"]["weights"]), _dec(d["linear"]["bias"]))


def dumps(model, scaler=None):
    if isinstance(model, Ensemble):
        d = ensemble_to_dict(model, scaler)
    elif isinstance(model, PbrffModel):
        d = pbrff_to_dict(model, scaler)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps(d, indent=1)


def loads(text):
    """Parse a model file; returns ``(model, scaler or None)``."""
    try:
        d = json.loads(text)
        fmt = d.get("format")
        if fmt == GBRFF_FORMAT:
            model = ensemble_from_dict(d)
        elif fmt == PBRFF_FORMAT:
            model = pbrff_from_dict(d)
        else:
            raise ModelFormatError(f"unknown model format {fmt!r}")
        return model, _unscaler(d.get("standardization"))
    except ModelFormatError:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def save(path, model, scaler=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model, scaler))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
