# SPDX-License-Identifier: MIT

"""
Command line interface: ``covop {spectrum,apply,compare,fit}``.

Exit codes are 0 on success, 1 for usage errors, 2 for unreadable or
malformed input, 3 for numerical failures (branch tracking, contour
proximity, grid size), and 4 for non-holomorphic functions on the contour
path.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import logging.config
import os
import sys
import tempfile

from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn, TypeVar

import attrs
import numpy as np

from . import _wire
from ._core import Signal
from .calculus import (
    DEFAULT_CONTOUR_MARGIN,
    DEFAULT_QUADRATURE,
    ClusterRegion,
    PhiSpec,
    contour_table,
    phi_table,
    verify_covariance,
)
from .exceptions import (
    ContourError,
    CovopError,
    DomainError,
    GridError,
    NonHolomorphicError,
    TrackingError,
    WireFormatError,
)
from .learn import (
    Dataset,
    FitResult,
    PhiFamily,
    fit,
    gaussian_family,
    gaussian_pair_family,
    polynomial_family,
    synthesize_dataset,
)
from .product import analyse_model, compare_models, product_generator
from .spectral import (
    DEFAULT_REGION_DELTA,
    BranchSet,
    RegionSet,
    detect_regions,
    spectrum_locus,
    track_branches,
)
from .transform import FrequencyGrid, apply_table, dtft, symbol


log = logging.getLogger("covop")

T = TypeVar("T")

QUADRATURES = (16, 32, 64, 128)
# Automatic grids start here and double on tracking failures up to the cap.
AUTO_GRID = 256
MAX_AUTO_GRID = 8192

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3
EXIT_NON_HOLOMORPHIC = 4


def _check_grid(
    _inst: RunConfig, _attr: attrs.Attribute[int | None], value: int | None
) -> None:
    if value is None:
        return
    if value < 8 or value & (value - 1):
        msg = f"Grid size must be a power of two of at least 8, got {value}."
        raise DomainError(msg)


def _check_positive(
    _inst: RunConfig, attr: attrs.Attribute[float], value: float
) -> None:
    if not value > 0:
        msg = f"{attr.name} must be positive, got {value!r}."
        raise DomainError(msg)


def _check_quadrature(
    _inst: RunConfig, _attr: attrs.Attribute[int], value: int
) -> None:
    if value not in QUADRATURES:
        msg = f"Quadrature must be one of {QUADRATURES}, got {value}."
        raise DomainError(msg)


def _check_budget(
    _inst: RunConfig, _attr: attrs.Attribute[int], value: int
) -> None:
    if value < 1:
        msg = f"Budget must be at least 1, got {value}."
        raise DomainError(msg)


def _check_seed(
    _inst: RunConfig, _attr: attrs.Attribute[int], value: int
) -> None:
    if value < 0:
        msg = f"Seed must not be negative, got {value}."
        raise DomainError(msg)


@attrs.frozen
class RunConfig:
    """
    Validated settings of one command line run.

    Attributes:
        grid: Grid size; None selects one automatically.
    """

    command: str
    kernel: Path
    out: Path = Path()
    grid: int | None = attrs.field(default=None, validator=_check_grid)
    delta: float = attrs.field(
        default=DEFAULT_REGION_DELTA, validator=_check_positive
    )
    quadrature: int = attrs.field(
        default=DEFAULT_QUADRATURE, validator=_check_quadrature
    )
    margin: float = attrs.field(
        default=DEFAULT_CONTOUR_MARGIN, validator=_check_positive
    )
    seed: int = attrs.field(default=0, validator=_check_seed)
    budget: int = attrs.field(default=500, validator=_check_budget)
    product: bool = False
    phi: Path | None = None
    signal: Path | None = None
    mode: str = "spectral"
    dataset: Path | None = None
    family: str = "poly"
    method: str = "lbfgsb"
    degree: int = 1
    region: str = "all"
    sigma: float = attrs.field(default=0.1, validator=_check_positive)
    init: tuple[float, ...] | None = None
    synthesize: tuple[float, ...] | None = None
    pairs: int = 16
    length: int = 16
    verbose: bool = False

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> RunConfig:
        fields = {a.name for a in attrs.fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in fields})


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        msg = f"expected comma-separated numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", type=Path, required=True)
    common.add_argument("--grid", type=int, help="grid size M (auto)")
    common.add_argument("--delta", type=float, default=DEFAULT_REGION_DELTA)
    common.add_argument("--quadrature", type=int, default=DEFAULT_QUADRATURE)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path())
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(
        prog="covop",
        description="Covariant filters on space-time graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    spectrum = sub.add_parser(
        "spectrum", parents=[common], help="spectrum and regions"
    )
    spectrum.add_argument(
        "--product", action="store_true", help="use the product baseline"
    )

    apply = sub.add_parser("apply", parents=[common], help="apply phi(S)")
    apply.add_argument("--phi", type=Path, required=True)
    apply.add_argument("--signal", type=Path, required=True)
    apply.add_argument(
        "--mode", choices=["spectral", "contour"], default="spectral"
    )
    apply.add_argument("--margin", type=float, default=DEFAULT_CONTOUR_MARGIN)

    sub.add_parser(
        "compare", parents=[common], help="compare with the product baseline"
    )

    fit_ = sub.add_parser("fit", parents=[common], help="fit phi to data")
    data = fit_.add_mutually_exclusive_group(required=True)
    data.add_argument("--dataset", type=Path)
    data.add_argument(
        "--synthesize",
        type=_floats,
        metavar="THETA",
        help="true parameters, e.g. --synthesize=-1.5,0.3,0.1",
    )
    fit_.add_argument(
        "--family",
        choices=["poly", "gaussian", "gaussian-pair"],
        default="poly",
    )
    fit_.add_argument("--degree", type=int, default=1)
    fit_.add_argument("--region", default="all")
    fit_.add_argument("--sigma", type=float, default=0.1)
    fit_.add_argument("--init", type=_floats, metavar="THETA")
    fit_.add_argument("--budget", type=int, default=500)
    fit_.add_argument(
        "--method", choices=["lbfgsb", "descent"], default="lbfgsb"
    )
    fit_.add_argument("--pairs", type=int, default=16)
    fit_.add_argument("--length", type=int, default=16)

    return parser


def configure_logging(verbose: bool) -> None:
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "standard": {"format": "%(name)s: %(message)s"},
            },
            "handlers": {
                "console": {
                    "class": "logging.StreamHandler",
                    "formatter": "standard",
                    "stream": "ext://sys.stderr",
                },
            },
            "loggers": {
                "covop": {
                    "handlers": ["console"],
                    "level": "DEBUG" if verbose else "INFO",
                    "propagate": False,
                },
            },
        }
    )


def write_atomic(path: Path, text: str) -> None:
    """
    Replace *path* with *text* in one step.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise

    log.info("wrote %s", path, extra={"covop_path": str(path)})


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _auto_grid(
    config: RunConfig, minimum: int, run: Callable[[FrequencyGrid], T]
) -> T:
    """
    Call *run* on the configured grid or, without one, on automatic grids
    that double as long as branch tracking fails.
    """
    if config.grid is not None:
        return run(FrequencyGrid(config.grid))

    size = max(AUTO_GRID, FrequencyGrid.for_supports(minimum).size)
    while True:
        try:
            return run(FrequencyGrid(size))
        except TrackingError as e:
            if e.suggested_grid > MAX_AUTO_GRID:
                raise
            log.info(
                "retrying on a grid of size %d",
                e.suggested_grid,
                extra={"covop_grid_size": e.suggested_grid},
            )
            size = e.suggested_grid


def cmd_spectrum(config: RunConfig) -> int:
    kernel = _wire.kernel_from_json(_read(config.kernel))
    if config.product:
        kernel = product_generator(kernel)

    analysis = _auto_grid(
        config,
        kernel.support_length,
        lambda grid: analyse_model(kernel, grid, config.delta),
    )
    write_atomic(
        config.out / "spectrum.csv", _wire.spectrum_to_csv(analysis.locus)
    )
    write_atomic(
        config.out / "regions.json", _wire.regions_to_json(analysis.regions)
    )
    write_atomic(config.out / "symbol.json", _wire.table_to_json(analysis.table))
    log.info(
        "found %d spectral region(s) on a grid of size %d",
        analysis.regions.count,
        analysis.table.grid.size,
    )

    return EXIT_OK


def _needs_branches(config: RunConfig, phi: PhiSpec) -> bool:
    return config.mode == "spectral" or any(
        isinstance(p.region, ClusterRegion) for p in phi.pieces
    )


def cmd_apply(config: RunConfig) -> int:
    if config.phi is None or config.signal is None:
        msg = "apply needs --phi and --signal."
        raise DomainError(msg)

    kernel = _wire.kernel_from_json(_read(config.kernel))
    phi = _wire.phi_from_json(_read(config.phi))
    x = _wire.signal_from_json(_read(config.signal))
    if config.mode == "contour" and not phi.holomorphic:
        msg = "The contour path needs holomorphic function pieces."
        raise NonHolomorphicError(msg)

    def run(grid: FrequencyGrid) -> tuple[Signal, float, FrequencyGrid]:
        table = symbol(kernel, grid)
        branches: BranchSet | None = None
        regions: RegionSet | None = None
        if _needs_branches(config, phi):
            branches = track_branches(table, quadrature=config.quadrature)
            regions = detect_regions(spectrum_locus(branches), config.delta)
        if config.mode == "spectral":
            assert branches is not None
            a = phi_table(branches, phi, regions=regions)
        else:
            a = contour_table(
                table,
                phi,
                config.quadrature,
                margin=config.margin,
                branches=branches,
                regions=regions,
            )
        return apply_table(a, x), verify_covariance(a, table), grid

    y, commutator, grid = _auto_grid(
        config, kernel.support_length + len(x) - 1, run
    )
    write_atomic(config.out / "output.json", _wire.signal_to_json(y))
    write_atomic(
        config.out / "output_frequency.json",
        _wire.frequency_signal_to_json(dtft(y, grid)),
    )
    print(_wire.format_float(commutator))

    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    kernel = _wire.kernel_from_json(_read(config.kernel))
    report = _auto_grid(
        config,
        kernel.support_length,
        lambda grid: compare_models(kernel, grid, config.delta),
    )
    ours, baseline = report.analyses
    write_atomic(config.out / "report.json", _wire.report_to_json(report))
    write_atomic(config.out / "spectrum.csv", _wire.spectrum_to_csv(ours.locus))
    write_atomic(
        config.out / "spectrum_product.csv",
        _wire.spectrum_to_csv(baseline.locus),
    )
    write_atomic(config.out / "edges.csv", _wire.edges_to_csv(ours.kernel))
    write_atomic(
        config.out / "edges_product.csv", _wire.edges_to_csv(baseline.kernel)
    )

    return EXIT_OK


def _family(config: RunConfig) -> PhiFamily:
    try:
        region = _wire.parse_region(config.region)
    except WireFormatError as e:
        raise DomainError(str(e)) from None
    if config.family == "gaussian":
        return gaussian_family(region)
    if config.family == "gaussian-pair":
        return gaussian_pair_family(
            config.sigma, ClusterRegion(0), ClusterRegion(1)
        )
    return polynomial_family(config.degree, region)


def cmd_fit(config: RunConfig) -> int:
    kernel = _wire.kernel_from_json(_read(config.kernel))
    family = _family(config)
    data = (
        _wire.dataset_from_json(_read(config.dataset))
        if config.dataset is not None
        else None
    )
    length = (
        max(len(x) for x, _ in data.pairs) if data is not None else config.length
    )

    if config.init is not None:
        init = np.array(config.init)
    elif family.linear:
        init = np.zeros(family.size)
    else:
        msg = f"The {family.name} family needs --init."
        raise DomainError(msg)

    def run(grid: FrequencyGrid) -> tuple[Dataset, FitResult]:
        branches = track_branches(
            symbol(kernel, grid), quadrature=config.quadrature
        )
        regions = detect_regions(spectrum_locus(branches), config.delta)
        dataset = data
        if dataset is None:
            assert config.synthesize is not None
            dataset = synthesize_dataset(
                branches,
                family,
                config.synthesize,
                pairs=config.pairs,
                length=config.length,
                seed=config.seed,
                regions=regions,
            )
        result = fit(
            branches,
            family,
            dataset,
            init,
            config.budget,
            regions=regions,
            method=config.method,  # type: ignore[arg-type]
        )
        return dataset, result

    dataset, result = _auto_grid(
        config, kernel.support_length + length - 1, run
    )
    if data is None:
        write_atomic(
            config.out / "dataset.json", _wire.dataset_to_json(dataset)
        )
    write_atomic(
        config.out / "fit.json",
        _wire.fit_to_json(result, family.name, dataset.seed),
    )
    log.info(
        "fitted %s: loss %s after %d iterations",
        family.name,
        _wire.format_float(result.loss),
        result.iterations,
    )

    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "spectrum": cmd_spectrum,
    "apply": cmd_apply,
    "compare": cmd_compare,
    "fit": cmd_fit,
}


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the command line and return its exit code.
    """
    ns = build_parser().parse_args(argv)
    configure_logging(ns.verbose)

    try:
        config = RunConfig.from_namespace(ns)
        return COMMANDS[config.command](config)
    except NonHolomorphicError as e:
        log.error("%s", e)
        return EXIT_NON_HOLOMORPHIC
    except (TrackingError, ContourError, GridError) as e:
        log.error("%s", e)
        return EXIT_NUMERICAL
    except (WireFormatError, OSError) as e:
        log.error("%s", e)
        return EXIT_IO
    except CovopError as e:
        log.error("%s", e)
        return EXIT_USAGE
