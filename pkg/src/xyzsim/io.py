"""CSV and JSON writers for experiment outputs.

Every CSV starts with '#'-prefixed header lines embedding the resolved
configuration (JSON) so a file is self-describing; a metadata sidecar
repeats it machine-readably.  Times are in units of 1/gamma, rates in
gamma.  Floats are written with repr, so identical runs produce
bit-identical files.
"""

import json
from pathlib import Path

import numpy as np


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_rows(path, header_lines, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def config_header(metadata: dict) -> list[str]:
    return [
        "units: times in 1/gamma, rates in gamma",
        "config = " + json.dumps(metadata, sort_keys=True),
    ]


def write_metadata_json(path, metadata: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_timeseries_csv(path, series, metadata: dict) -> None:
    columns = ("time",) + series.labels
    rows = ([t, *row] for t, row in zip(series.times, series.values))
    _write_rows(path, config_header(metadata), columns, rows)


def write_ensemble_csv(path, result, metadata: dict) -> None:
    columns = ["time", "mean_mx"]
    if result.stderr_mx is not None:
        columns.append("stderr_mx")
        rows = zip(result.times, result.mean_mx, result.stderr_mx)
    else:
        rows = zip(result.times, result.mean_mx)
    _write_rows(path, config_header(metadata), columns, rows)


def write_trajectory_csv(path, record, metadata: dict) -> None:
    columns = ["time", "mx_psi"]
    if record.per_site is not None:
        columns += [f"sx_site{j}" for j in range(record.per_site.shape[1])]
        rows = ([t, m, *site_row] for t, m, site_row in
                zip(record.times, record.mx, record.per_site))
    else:
        rows = zip(record.times, record.mx)
    header = config_header(metadata) + [f"seed = {record.seed}"]
    _write_rows(path, header, columns, rows)


def write_spectrum_csv(path, spectrum, metadata: dict) -> None:
    rows = zip(spectrum.eigenvalues.real, spectrum.eigenvalues.imag,
               (int(p) for p in spectrum.parities))
    header = config_header(metadata) + [f"gap = {spectrum.gap!r}"]
    _write_rows(path, header, ("re", "im", "parity"), rows)


def write_histogram_csv(path, hist, metadata: dict) -> None:
    header = config_header(metadata) + [
        f"sample_count = {hist.sample_count}",
        f"t_s = {hist.t_s!r}",
    ]
    rows = zip(hist.bin_centers(), hist.probabilities)
    _write_rows(path, header, ("bin_center", "probability"), rows)


def write_gap_sweep_csv(path, points, metadata: dict) -> None:
    rows = ([p.jy, p.gap, "" if p.gap_err is None else p.gap_err] for p in points)
    _write_rows(path, config_header(metadata), ("jy", "rate", "rate_err"), rows)


def write_bimodality_csv(path, points, metadata: dict) -> None:
    rows = ([p.jy, p.b, p.sample_count] for p in points)
    _write_rows(path, config_header(metadata), ("jy", "b", "sample_count"), rows)


def write_operator_csv(path, op) -> None:
    """Dense debug export: row i holds re(A[i,0]), im(A[i,0]), re(A[i,1]), ...

    so a d-dimensional operator becomes d rows of 2d interleaved columns.
    """
    dense = op.toarray() if hasattr(op, "toarray") else op
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# dense operator, dim = {dense.shape[0]}, "
                 "columns interleave re,im per entry\n")
        for row in dense:
            fh.write(",".join(f"{v.real!r},{v.imag!r}" for v in row) + "\n")
