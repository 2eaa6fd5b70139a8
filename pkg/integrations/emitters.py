"""CSV and JSON emitters for lab results.

Floats are written with 17 significant digits so every value reads back
exactly. Output carries no timestamps: identical inputs give identical bytes.
"""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import click
from pydantic import BaseModel

from bounds.conformal import lambda_brackets
from dynamics.orbits import running_geometry
from schemas.cycles import Cycle
from schemas.maps import MapSpec
from schemas.orbit import Orbit
from schemas.reports import BoundReport, EnvelopePoint
from schemas.telescope import PullbackRegion, TailDistribution, TelescopeResult

logger = logging.getLogger(__name__)

ORBIT_COLUMNS = ["i", "re_z", "im_z", "log_abs_deriv", "chi_i", "delta_i", "D_i"]
TELESCOPE_COLUMNS = ["i", "tau_i", "m_i"]
LAMBDA_COLUMNS = ["R", "lambda_lower", "lambda_upper"]
ENVELOPE_COLUMNS = [
    "n", "chi_n", "liminf_proxy", "envelope", "log_rho_n", "sum_m", "delta_n", "D_n",
]
BASIN_COLUMNS = ["c_re", "c_im", "in_basin", "period", "abs_multiplier", "steps", "reason"]


def fmt(value: Any) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(value) for value in row])
    return buffer.getvalue()


def read_csv(text: str) -> List[Dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def orbit_rows(spec: MapSpec, orbit: Orbit) -> List[List[Any]]:
    """One row per orbit point; log_abs_deriv is None on the last row."""
    deltas, diameters = running_geometry(spec, orbit)
    rows = []
    for i, z in enumerate(orbit.z):
        log_deriv = orbit.log_abs_deriv[i] if i < orbit.n else None
        rows.append([i, z.real, z.imag, log_deriv, orbit.chi_prefix[i], deltas[i], diameters[i]])
    return rows


def orbit_csv(spec: MapSpec, orbit: Orbit) -> str:
    return to_csv(ORBIT_COLUMNS, orbit_rows(spec, orbit))


def orbit_json(spec: MapSpec, orbit: Orbit) -> str:
    """The orbit rows as a list of records."""
    return to_json([dict(zip(ORBIT_COLUMNS, row)) for row in orbit_rows(spec, orbit)])


def read_orbit_csv(text: str) -> Orbit:
    """Inverse of :func:`orbit_csv` for the orbit fields."""
    rows = read_csv(text)
    return Orbit(
        z=[complex(float(row["re_z"]), float(row["im_z"])) for row in rows],
        log_abs_deriv=[float(row["log_abs_deriv"]) for row in rows[:-1]],
        chi_prefix=[float(row["chi_i"]) for row in rows],
    )


def telescope_json(tele: TelescopeResult, tail: TailDistribution) -> str:
    """Telescope and tail distribution in one document."""
    return to_json({
        "telescope": tele.model_dump(mode="json"),
        "tail": _tail_record(tail),
    })


def telescope_csv(tele: TelescopeResult) -> str:
    """Rows i = 0 .. n with tau_i and m_i; m_n is blank."""
    rows = [
        [i, tele.tau[i], tele.m[i] if i < tele.n else None]
        for i in range(tele.n + 1)
    ]
    return to_csv(TELESCOPE_COLUMNS, rows)


def read_telescope_csv(text: str) -> TelescopeResult:
    """Inverse of :func:`telescope_csv`; log tau is recovered from tau."""
    rows = read_csv(text)
    tau = [float(row["tau_i"]) for row in rows]
    return TelescopeResult(
        n=len(rows) - 1,
        tau=tau,
        log_tau=[math.log(value) if value > 0 else -math.inf for value in tau],
        m=[float(row["m_i"]) for row in rows[:-1]],
    )


def _tail_record(tail: TailDistribution) -> Dict[str, Any]:
    return {"n": tail.n, "sorted_m": tail.sorted_m, "integral": tail.integral()}


def tail_json(tail: TailDistribution) -> str:
    return to_json(_tail_record(tail))


def cycles_json(cycles: Sequence[Cycle]) -> str:
    return to_json([cycle.to_record() for cycle in cycles])


def regions_json(regions: Sequence[PullbackRegion]) -> str:
    return to_json([region.to_record() for region in regions])


def lambda_table_csv(radii: Sequence[float]) -> str:
    rows = []
    for R in radii:
        lower, upper = lambda_brackets(R)
        rows.append([R, lower, upper])
    return to_csv(LAMBDA_COLUMNS, rows)


def models_csv(columns: Sequence[str], models: Iterable[BaseModel]) -> str:
    """CSV with one row per model, taking the named attributes."""
    return to_csv(columns, ([getattr(model, column) for column in columns] for model in models))


def models_json(models: Iterable[BaseModel]) -> str:
    return to_json([model.model_dump(mode="json") for model in models])


def envelope_csv(points: Sequence[EnvelopePoint]) -> str:
    return models_csv(ENVELOPE_COLUMNS, points)


def report_json(report: BoundReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


class ResultWriter:
    """Writes emitted text to a file, or to stdout when no path is set."""

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else None

    def write(self, content: str, suffix: Optional[str] = None) -> Optional[Path]:
        """Write content; ``suffix`` names a sibling file next to the main output.

        Returns:
            The file written, or None for stdout
        """
        if self.path is None:
            click.echo(content, nl=False)
            return None
        target = self.path if suffix is None else self.path.with_name(self.path.stem + suffix)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        logger.info(f"Wrote {target}")
        return target
