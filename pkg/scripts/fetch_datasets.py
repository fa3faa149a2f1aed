"""Fetch the benchmark tables into ``datasets/`` as plain CSV files.

Sources
-------
concrete.csv
    UCI Concrete Compressive Strength (Yeh, 1998), 1030 rows.  Taken from the
    copy in the R ``modeldata`` package as redistributed by the ``rdatasets``
    Python package (``pip install rdatasets``), which needs no network access
    beyond PyPI.  Falls back to the UCI archive spreadsheet.
energy_heating.csv
    UCI Energy Efficiency (Tsanas and Xifara, 2012), 768 rows, heating load
    target.  Downloaded from the UCI archive (``ENB2012_data.xlsx``).
yacht.csv
    Yacht Hydrodynamics (Gerritsma et al.), 308 rows, residuary resistance
    target.  Downloaded from the UCI archive (``yacht_hydrodynamics.data``).

The spreadsheet sources need ``pandas`` with ``openpyxl``; these are tools for
this script only and are not dependencies of the package.

Usage::

    python scripts/fetch_datasets.py [--out datasets] [--only concrete,yacht]
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

UCI = "https://archive.ics.uci.edu/static/public"

CONCRETE_COLUMNS = [
    "cement", "blast_furnace_slag", "fly_ash", "water", "superplasticizer",
    "coarse_aggregate", "fine_aggregate", "age", "compressive_strength",
]
ENERGY_COLUMNS = [
    "relative_compactness", "surface_area", "wall_area", "roof_area", "overall_height",
    "orientation", "glazing_area", "glazing_area_distribution", "heating_load",
]
YACHT_COLUMNS = [
    "longitudinal_position", "prismatic_coefficient", "length_displacement_ratio",
    "beam_draught_ratio", "length_beam_ratio", "froude_number", "residuary_resistance",
]


def _download(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def _write(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def _from_uci_zip(archive: str, member_suffix: str) -> bytes:
    with zipfile.ZipFile(io.BytesIO(_download(f"{UCI}/{archive}"))) as zf:
        name = next(n for n in zf.namelist() if n.endswith(member_suffix))
        return zf.read(name)


def fetch_concrete(out: Path) -> None:
    try:
        from rdatasets import data

        frame = data("modeldata", "concrete")
        rows = frame[CONCRETE_COLUMNS].to_numpy().tolist()
    except ImportError:
        import pandas as pd

        raw = _from_uci_zip("165/concrete+compressive+strength.zip", "Concrete_Data.xls")
        rows = pd.read_excel(io.BytesIO(raw)).to_numpy().tolist()
    _write(out / "concrete.csv", CONCRETE_COLUMNS, rows)


def fetch_energy(out: Path) -> None:
    import pandas as pd

    raw = _from_uci_zip("242/energy+efficiency.zip", "ENB2012_data.xlsx")
    frame = pd.read_excel(io.BytesIO(raw)).dropna(how="all")
    # X1..X8 are the inputs, Y1 heating load, Y2 cooling load (dropped)
    rows = frame.iloc[:, :9].to_numpy().tolist()
    _write(out / "energy_heating.csv", ENERGY_COLUMNS, rows)


def fetch_yacht(out: Path) -> None:
    raw = _from_uci_zip("243/yacht+hydrodynamics.zip", "yacht_hydrodynamics.data")
    rows = [line.split() for line in raw.decode().splitlines() if line.strip()]
    _write(out / "yacht.csv", YACHT_COLUMNS, rows)


FETCHERS = {"concrete": fetch_concrete, "energy": fetch_energy, "yacht": fetch_yacht}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "datasets"))
    parser.add_argument("--only", default=",".join(FETCHERS))
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for name in args.only.split(","):
        try:
            FETCHERS[name.strip()](out)
        except Exception as exc:  # keep going; report every failure
            print(f"could not fetch {name}: {exc}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
