"""Model archives: fitted models as human-readable, diffable JSON."""

from __future__ import annotations

import json

import numpy as np

from .data import FidelityDataset
from .errors import ParseError
from .kernels import RbfKernel, SpectralMixtureKernel, TaskMatrix
from .mogp import FitDiagnostics, MogpModel, RestartRecord

__all__ = ["save_model", "load_model", "model_to_dict", "model_from_dict"]

SCHEMA_VERSION = 1


def _noise_field(noise):
    if np.isscalar(noise):
        return float(noise)
    return np.asarray(noise).tolist()


def _encode_float(v):
    # failed restarts carry nan/-inf; JSON needs them as strings
    v = float(v)
    return v if np.isfinite(v) else repr(v)


def _decode_float(v):
    return float(v)


def model_to_dict(model):
    kern = model.kernel
    if isinstance(kern, RbfKernel):
        kernel = {
            "kind": "rbf",
            "lengthscales": kern.lengthscales.tolist(),
            "signal_variance": kern.signal_variance,
            "noise_variance": _noise_field(kern.noise_variance),
        }
    else:
        kernel = {
            "kind": "spectral_mixture",
            "weights": kern.weights.tolist(),
            "means": kern.means.tolist(),
            "variances": kern.variances.tolist(),
            "noise_variance": _noise_field(kern.noise_variance),
        }
    out = {
        "schema_version": SCHEMA_VERSION,
        "kernel": kernel,
        "task_factor": model.task.factor.tolist(),
        "data": {
            "x": model.dataset.x.tolist(),
            "y": model.dataset.y.tolist(),
            "labels": list(model.dataset.labels),
            "provenance": model.dataset.provenance,
        },
    }
    if model.diagnostics is not None:
        d = model.diagnostics
        out["diagnostics"] = {
            "lml": d.lml,
            "best_restart": d.best_restart,
            "restarts": [
                {
                    "index": r.index,
                    "initial_lml": _encode_float(r.initial_lml),
                    "final_lml": _encode_float(r.final_lml),
                    "iterations": r.iterations,
                    "success": r.success,
                    "message": r.message,
                }
                for r in d.restarts
            ],
        }
    return out


def model_from_dict(payload):
    try:
        version = payload["schema_version"]
        if version != SCHEMA_VERSION:
            raise ParseError(f"unsupported archive schema version {version}")
        kernel = payload["kernel"]
        kind = kernel["kind"]
        noise = kernel.get("noise_variance", 0.0)
        if kind == "rbf":
            kern = RbfKernel(
                lengthscales=kernel["lengthscales"],
                signal_variance=kernel["signal_variance"],
                noise_variance=noise,
            )
        elif kind == "spectral_mixture":
            kern = SpectralMixtureKernel(
                weights=kernel["weights"],
                means=kernel["means"],
                variances=kernel["variances"],
                noise_variance=noise,
            )
        else:
            raise ParseError(f"unknown kernel kind {kind!r}")
        task = TaskMatrix(np.asarray(payload["task_factor"], dtype=float))
        data = payload["data"]
        dataset = FidelityDataset(
            x=np.asarray(data["x"], dtype=float),
            y=np.asarray(data["y"], dtype=float),
            labels=tuple(data.get("labels") or ()),
            provenance=data.get("provenance"),
        )
        diagnostics = None
        if "diagnostics" in payload:
            d = payload["diagnostics"]
            diagnostics = FitDiagnostics(
                lml=d["lml"],
                best_restart=d["best_restart"],
                restarts=tuple(
                    RestartRecord(
                        index=r["index"],
                        initial_lml=_decode_float(r["initial_lml"]),
                        final_lml=_decode_float(r["final_lml"]),
                        iterations=r["iterations"],
                        success=r["success"],
                        message=r["message"],
                    )
                    for r in d["restarts"]
                ),
            )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model archive: {exc!r}") from exc
    return MogpModel(kernel=kern, task=task, dataset=dataset, diagnostics=diagnostics)


def save_model(model, path):
    """Write a model archive; output bytes are deterministic."""
    payload = model_to_dict(model)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def load_model(path):
    """Load a model archive written by :func:`save_model`."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in model archive: {exc}", line=exc.lineno) from exc
    return model_from_dict(payload)
