# SPDX-License-Identifier: MIT

"""
JSON and CSV formats of the command line.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists. Output is deterministic: floats are written with 17 significant
digits in lowercase scientific notation, non-finite floats as ``null``.
"""

from __future__ import annotations

import csv
import io
import json

from collections.abc import Sequence
from typing import Any, Literal, Union

import numpy as np

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ._core import KernelSequence, Signal, kernel_from_taps
from .calculus import (
    EVERYWHERE,
    ClusterRegion,
    DiscRegion,
    PhiSpec,
    Region,
    exp_affine_phi,
    gaussian_phi,
    poly_phi,
    sqrt_shift_phi,
)
from .exceptions import CovopError, WireFormatError
from .learn import Dataset, FitResult
from .product import ComparisonReport, ModelSummary
from .spectral import RegionSet, SpectrumLocus
from .transform import FrequencySignal, FrequencyTable


ComplexPair = tuple[float, float]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TapModel(_Model):
    t: int
    m: list[list[ComplexPair]]


class KernelModel(_Model):
    n: int = Field(ge=1)
    taps: list[TapModel]


class SignalModel(_Model):
    n: int = Field(ge=1)
    start: int
    samples: list[list[ComplexPair]]


class DiscModel(_Model):
    center: ComplexPair
    radius: float


class DiscSelector(_Model):
    disc: DiscModel


class PieceModel(_Model):
    region: Union[str, DiscSelector] = "all"
    family: Literal["poly", "exp_affine", "sqrt_shift", "gaussian"]
    params: list[Union[float, ComplexPair]]


class PhiModel(_Model):
    pieces: list[PieceModel] = Field(min_length=1)


class PairModel(_Model):
    x: SignalModel
    y: SignalModel


class DatasetModel(_Model):
    pairs: list[PairModel] = Field(min_length=1)
    seed: Union[int, None] = None


def _parse(model: type[_Model], text: str, what: str) -> Any:
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        msg = f"Invalid {what}: {e}"
        raise WireFormatError(msg) from None


def _complex(value: float | Sequence[float]) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    re, im = value
    return complex(re, im)


def _matrix(rows: list[list[ComplexPair]]) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=np.complex128)
    try:
        return np.array(
            [[complex(re, im) for re, im in row] for row in rows],
            dtype=np.complex128,
        )
    except ValueError:
        msg = "Matrix rows differ in length."
        raise WireFormatError(msg) from None


def _signal(model: SignalModel) -> Signal:
    if not model.samples:
        return Signal(model.n, model.start, np.zeros((0, model.n)))
    return Signal(model.n, model.start, _matrix(model.samples))


def kernel_from_json(text: str) -> KernelSequence:
    """
    Parse ``{"n": int, "taps": [{"t": int, "m": [[[re, im], ...], ...]}]}``.

    Raises:
        WireFormatError: If *text* isn't a valid kernel.
    """
    model = _parse(KernelModel, text, "kernel")
    try:
        return kernel_from_taps(
            model.n, [(tap.t, _matrix(tap.m)) for tap in model.taps]
        )
    except CovopError as e:
        raise WireFormatError(f"Invalid kernel: {e}") from None


def signal_from_json(text: str) -> Signal:
    """
    Parse ``{"n": int, "start": int, "samples": [[[re, im], ...], ...]}``.

    Raises:
        WireFormatError: If *text* isn't a valid signal.
    """
    model = _parse(SignalModel, text, "signal")
    try:
        return _signal(model)
    except CovopError as e:
        raise WireFormatError(f"Invalid signal: {e}") from None


def parse_region(selector: str | DiscSelector) -> Region:
    if isinstance(selector, DiscSelector):
        return DiscRegion(_complex(selector.disc.center), selector.disc.radius)
    if selector == "all":
        return EVERYWHERE
    prefix, _, index = selector.partition(":")
    if prefix == "cluster" and index.isdigit():
        return ClusterRegion(int(index))

    msg = f"Unknown region {selector!r}."
    raise WireFormatError(msg)


def _piece(model: PieceModel) -> PhiSpec:
    region = parse_region(model.region)
    params = model.params
    if model.family == "poly":
        return poly_phi([_complex(p) for p in params], region)
    if model.family == "exp_affine" and len(params) in (1, 2):
        return exp_affine_phi(*(_complex(p) for p in params), region=region)
    if model.family == "sqrt_shift" and len(params) == 1:
        return sqrt_shift_phi(_complex(params[0]), region)
    if (
        model.family == "gaussian"
        and len(params) == 2
        and isinstance(params[1], float)
    ):
        return gaussian_phi(_complex(params[0]), params[1], region)

    msg = f"Wrong parameters for a {model.family} piece: {params!r}."
    raise WireFormatError(msg)


def phi_from_json(text: str) -> PhiSpec:
    """
    Parse ``{"pieces": [{"region": ..., "family": ..., "params": [...]}]}``.

    *region* is ``"all"``, ``"cluster:<i>"``, or
    ``{"disc": {"center": [re, im], "radius": r}}``. Parameters are
    ``poly``: the coefficients; ``exp_affine``: ``alpha`` and optionally
    ``beta``; ``sqrt_shift``: ``gamma``; ``gaussian``: ``mu`` and ``sigma``.

    Raises:
        WireFormatError: If *text* isn't a valid function.
    """
    model = _parse(PhiModel, text, "function")
    try:
        pieces = [_piece(p) for p in model.pieces]
    except WireFormatError:
        raise
    except CovopError as e:
        raise WireFormatError(f"Invalid function: {e}") from None

    spec = pieces[0]
    for p in pieces[1:]:
        spec = spec + p
    return spec


def dataset_from_json(text: str) -> Dataset:
    """
    Parse ``{"pairs": [{"x": signal, "y": signal}], "seed": int | null}``.

    Raises:
        WireFormatError: If *text* isn't a valid dataset.
    """
    model = _parse(DatasetModel, text, "dataset")
    try:
        return Dataset(
            [(_signal(p.x), _signal(p.y)) for p in model.pairs], model.seed
        )
    except CovopError as e:
        raise WireFormatError(f"Invalid dataset: {e}") from None


def format_float(value: float) -> str:
    """
    >>> from covop._wire import format_float
    >>> format_float(0.1)
    '1.0000000000000001e-01'
    """
    return format(float(value), ".16e")


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def _rows(a: np.ndarray) -> list[Any]:
    if a.ndim == 0:
        return _pair(complex(a))
    return [_rows(row) for row in a]


def dumps(obj: Any, indent: int = 0) -> str:
    """
    Serialize *obj* deterministically; see the module docstring.
    """
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if np.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = ",\n".join(f"{pad}{dumps(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + end + "]"

    msg = f"Can't serialize {type(obj).__name__}."
    raise TypeError(msg)


def kernel_to_json(kernel: KernelSequence) -> str:
    return dumps(
        {
            "n": kernel.n,
            "taps": [{"t": t, "m": _rows(m)} for t, m in kernel.taps.items()],
        }
    )


def _signal_object(x: Signal) -> dict[str, Any]:
    return {"n": x.n, "start": x.start, "samples": _rows(x.samples)}


def signal_to_json(x: Signal) -> str:
    return dumps(_signal_object(x))


def dataset_to_json(data: Dataset) -> str:
    return dumps(
        {
            "pairs": [
                {"x": _signal_object(x), "y": _signal_object(y)}
                for x, y in data.pairs
            ],
            "seed": data.seed,
        }
    )


def table_to_json(table: FrequencyTable) -> str:
    """
    ``{"n": int, "taps": [{"omega": w, "m": matrix}]}``, one tap per grid
    point.
    """
    return dumps(
        {
            "n": table.n,
            "taps": [
                {"omega": w, "m": _rows(m)}
                for w, m in zip(table.grid.points, table.values)
            ],
        }
    )


def frequency_signal_to_json(xhat: FrequencySignal) -> str:
    """
    ``{"n": int, "taps": [{"omega": w, "v": vector}]}``, laid out like
    :func:`table_to_json`.
    """
    return dumps(
        {
            "n": xhat.n,
            "taps": [
                {"omega": w, "v": _rows(v)}
                for w, v in zip(xhat.grid.points, xhat.values)
            ],
        }
    )


def spectrum_to_csv(locus: SpectrumLocus) -> str:
    """
    One ``omega,branch,re,im`` row per grid point and branch.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega", "branch", "re", "im"])
    for w, k, z in zip(locus.omega, locus.branch, locus.points):
        writer.writerow(
            [format_float(w), int(k), format_float(z.real), format_float(z.imag)]
        )
    return buf.getvalue()


def edges_to_csv(kernel: KernelSequence) -> str:
    """
    One ``lag,source,target,re,im`` row per nonzero tap entry.

    Entry ``(i, j)`` of the tap at lag *t* carries node *j*'s value at time
    ``s`` to node *i* at time ``s + t``.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lag", "source", "target", "re", "im"])
    for t, m in zip(kernel.offsets, kernel.matrices):
        for i, j in zip(*np.nonzero(m)):
            writer.writerow(
                [
                    t,
                    int(j),
                    int(i),
                    format_float(m[i, j].real),
                    format_float(m[i, j].imag),
                ]
            )
    return buf.getvalue()


def _regions_object(regions: RegionSet) -> dict[str, Any]:
    return {
        "clusters": [list(c) for c in regions.clusters],
        "separation": regions.separation,
        "delta": regions.delta,
    }


def regions_to_json(regions: RegionSet) -> str:
    return dumps(_regions_object(regions))


def _summary_object(summary: ModelSummary) -> dict[str, Any]:
    return {
        "clusters": summary.clusters,
        "separation": summary.separation,
        "projection_variation": summary.projection_variation,
        "projection_drift": summary.projection_drift,
        "bandpass_drift": summary.bandpass_drift,
        "monodromy": list(summary.monodromy),
    }


def report_to_json(report: ComparisonReport) -> str:
    return dumps(
        {
            "grid": report.grid_size,
            "delta": report.delta,
            "checkpoints": list(report.checkpoints),
            "generator": _summary_object(report.generator),
            "product": _summary_object(report.product),
        }
    )


def fit_to_json(
    result: FitResult, family: str, seed: int | None = None
) -> str:
    return dumps(
        {
            "family": family,
            "theta": [float(t) for t in result.theta],
            "loss": result.loss,
            "trace": list(result.trace),
            "converged": result.converged,
            "iterations": result.iterations,
            "seed": seed,
        }
    )
