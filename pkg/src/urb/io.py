"""Scheme files (JSON) and decay data (CSV).

A scheme file is a JSON object::

    {
      "dim": 2,
      "gates": [{"prob": 0.5, "ideal_unitary": [[[1, 0], [0, 0]], ...],
                 "noise": {...}, "inverting_noise": {...}}, ...],
      "rho0": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
      "m0": ...,
      "intermediate": {...},
      "povm": "factored" | "recovery" | "cycle" | "xeb"
    }

``"gate_set": "clifford" | "pauli"`` may replace ``"gates"``, with uniform
weights and top-level ``"noise"``/``"inverting_noise"`` applied to every gate
(top-level noise is also the default for gates that omit it).

Noise specs are ``"none"`` or objects with a ``"type"`` among ``none``,
``depolarizing`` (``q``), ``replacement`` (``p``, ``state``),
``amplitude_damping`` (``gamma``), ``pauli`` (``probs``), ``kraus`` (``ops``)
and ``ptm`` (``matrix``), plus an optional ``"placement"``.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
from importlib import resources
from typing import Any

import numpy as np

from .gates import clifford_group, pauli_group
from .noise import PLACEMENTS, NoiseModel
from .schemes import (
    CyclePovm,
    DecayDataset,
    FactoredPovm,
    RecoveryPovm,
    URBScheme,
    XebPovm,
    dephasing_channel,
)
from .superops import (
    Superoperator,
    amplitude_damping,
    as_density_matrix,
    as_povm_element,
    depolarizing,
    identity_channel,
    is_cptp,
    n_qubits_of,
    pauli_channel,
    ptm_from_kraus_unchecked,
    replacement,
    unitary_channel,
)
from .twirling import EnsembleError, GateEnsemble, make_ensemble

CSV_HEADER = ("m", "p_hat", "std_err", "K", "shots", "seed")
POVM_KINDS = ("factored", "recovery", "cycle", "xeb")
BUNDLED = ("clifford_rb_d2", "pauli_d2", "clifford_dep09_d2", "toy_four_gate_d2")


class SchemeFileError(ValueError):
    """Invalid scheme file; ``field`` is a JSON path and ``line`` is set for syntax errors."""

    def __init__(self, message: str, field: str = "", line: int | None = None, source: str = ""):
        self.field, self.line, self.source, self.message = field, line, source, message
        where = source or "<scheme>"
        if line is not None:
            where += f":{line}"
        if field:
            where += f": {field}"
        super().__init__(f"{where}: {message}")


def _fail(field: str, message: str):
    raise SchemeFileError(message, field)


def _number(x, field: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        _fail(field, f"expected a number, got {type(x).__name__}")
    if not np.isfinite(x):
        _fail(field, "number must be finite")
    return float(x)


def _matrix(x, d: int, field: str) -> np.ndarray:
    """``d x d`` matrix of ``[re, im]`` pairs or real numbers."""
    if not isinstance(x, list) or len(x) != d:
        _fail(field, f"expected a {d}x{d} matrix")
    out = np.zeros((d, d), dtype=complex)
    for i, row in enumerate(x):
        if not isinstance(row, list) or len(row) != d:
            _fail(f"{field}[{i}]", f"expected a row of length {d}")
        for j, z in enumerate(row):
            f = f"{field}[{i}][{j}]"
            if isinstance(z, list):
                if len(z) != 2:
                    _fail(f, "complex entries are [re, im] pairs")
                out[i, j] = _number(z[0], f) + 1j * _number(z[1], f)
            else:
                out[i, j] = _number(z, f)
    return out


def _real_matrix(x, n: int, field: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != n or any(not isinstance(r, list) or len(r) != n for r in x):
        _fail(field, f"expected a real {n}x{n} matrix")
    return np.array([[_number(v, f"{field}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)])


def _channel(spec, d: int, field: str) -> tuple[Superoperator | None, str | None]:
    """Parse a noise spec into ``(channel or None, placement or None)``."""
    try:
        return _channel_unchecked(spec, d, field)
    except SchemeFileError:
        raise
    except ValueError as exc:
        _fail(field, str(exc))


def _channel_unchecked(spec, d: int, field: str):
    if spec is None or spec == "none":
        return None, None
    if not isinstance(spec, dict):
        _fail(field, "noise spec must be \"none\" or an object")
    kind = spec.get("type")
    placement = spec.get("placement")
    if placement is not None and placement not in PLACEMENTS:
        _fail(f"{field}.placement", f"unsupported placement {placement!r}; expected one of {list(PLACEMENTS)}")
    if kind == "none":
        ch = None
    elif kind == "depolarizing":
        ch = depolarizing(_number(spec.get("q"), f"{field}.q"), d)
    elif kind == "replacement":
        p = _number(spec.get("p"), f"{field}.p")
        state = _state(spec.get("state"), d, f"{field}.state")
        ch = replacement(p, state)
    elif kind == "amplitude_damping":
        if d != 2:
            _fail(field, "amplitude damping is single-qubit")
        g = _number(spec.get("gamma"), f"{field}.gamma")
        if not 0 <= g <= 1:
            _fail(f"{field}.gamma", "damping rate must lie in [0, 1]")
        ch = amplitude_damping(g)
    elif kind == "pauli":
        probs = spec.get("probs")
        if not isinstance(probs, list) or len(probs) != d * d:
            _fail(f"{field}.probs", f"expected {d * d} probabilities")
        ch = pauli_channel([_number(v, f"{field}.probs[{i}]") for i, v in enumerate(probs)])
    elif kind == "kraus":
        ops = spec.get("ops")
        if not isinstance(ops, list) or not ops:
            _fail(f"{field}.ops", "expected a nonempty list of Kraus operators")
        ch = ptm_from_kraus_unchecked([_matrix(k, d, f"{field}.ops[{i}]") for i, k in enumerate(ops)])
    elif kind == "ptm":
        ch = Superoperator(_real_matrix(spec.get("matrix"), d * d, f"{field}.matrix"))
    else:
        _fail(f"{field}.type", f"unknown noise type {kind!r}")
    if ch is not None and not is_cptp(ch):
        _fail(field, "noise is not a quantum channel (fails the CPTP check)")
    return ch, placement


def _state(x, d: int, field: str) -> np.ndarray:
    rho = _matrix(x, d, field)
    try:
        return as_density_matrix(rho)
    except ValueError as exc:
        _fail(field, f"not a density matrix ({exc})")


def _povm(x, d: int, field: str) -> np.ndarray:
    m = _matrix(x, d, field)
    try:
        return as_povm_element(m)
    except ValueError as exc:
        _fail(field, f"not a POVM element ({exc})")


def _noise_model(spec_r, spec_l, d: int, field: str) -> NoiseModel:
    right, pr = _channel(spec_r, d, f"{field}.noise" if field else "noise")
    left, pl = _channel(spec_l, d, f"{field}.inverting_noise" if field else "inverting_noise")
    if pr and pl and pr != pl:
        _fail(field or "noise", "noise and inverting_noise use different placements")
    return NoiseModel(right, left, pr or pl or "in-between")


def scheme_from_dict(doc: Any, source: str = "") -> URBScheme:
    try:
        return _scheme_from_dict(doc)
    except SchemeFileError as exc:
        exc.source = source
        raise SchemeFileError(exc.message, exc.field, exc.line, source) from None


def _scheme_from_dict(doc: Any) -> URBScheme:
    if not isinstance(doc, dict):
        _fail("", "top level must be a JSON object")
    if "dim" not in doc:
        _fail("dim", "missing required field")
    d = doc["dim"]
    if isinstance(d, bool) or not isinstance(d, int):
        _fail("dim", "must be an integer")
    try:
        n_qubits_of(d)
    except ValueError as exc:
        _fail("dim", str(exc))

    default_r, default_l = doc.get("noise"), doc.get("inverting_noise")
    if ("gates" in doc) == ("gate_set" in doc):
        _fail("gates", "exactly one of \"gates\" and \"gate_set\" is required")
    if "gate_set" in doc:
        gs = doc["gate_set"]
        builders = {"clifford": clifford_group, "pauli": pauli_group}
        if gs not in builders:
            _fail("gate_set", f"unknown gate set {gs!r}; expected one of {sorted(builders)}")
        unitaries = builders[gs](d)
        probs = None
        noise = _noise_model(default_r, default_l, d, "")
    else:
        gates = doc["gates"]
        if not isinstance(gates, list) or not gates:
            _fail("gates", "expected a nonempty list")
        unitaries, probs, models = [], [], []
        for i, g in enumerate(gates):
            f = f"gates[{i}]"
            if not isinstance(g, dict):
                _fail(f, "gate entries must be objects")
            for key in ("prob", "ideal_unitary"):
                if key not in g:
                    _fail(f"{f}.{key}", "missing required field")
            p = _number(g["prob"], f"{f}.prob")
            if not 0 < p <= 1:
                _fail(f"{f}.prob", "probability must lie in (0, 1]")
            u = _matrix(g["ideal_unitary"], d, f"{f}.ideal_unitary")
            if not np.allclose(u.conj().T @ u, np.eye(d), atol=1e-8):
                _fail(f"{f}.ideal_unitary", "matrix is not unitary")
            unitaries.append(u)
            probs.append(p)
            models.append(
                _noise_model(g.get("noise", default_r), g.get("inverting_noise", default_l), d, f)
            )
        total = sum(probs)
        if abs(total - 1) > 1e-9:
            _fail("gates", f"probabilities sum to {total:.12g}, expected 1")
        probs = np.array(probs) / total
        from .noise import gate_dependent

        noise = gate_dependent(models)

    try:
        ensemble = make_ensemble(unitaries, probs, noise)
    except EnsembleError as exc:
        _fail("gates", str(exc))

    ket0 = np.zeros((d, d), dtype=complex)
    ket0[0, 0] = 1
    rho0 = _state(doc["rho0"], d, "rho0") if "rho0" in doc else ket0
    m0 = _povm(doc["m0"], d, "m0") if "m0" in doc else ket0
    inter, _ = _channel(doc.get("intermediate"), d, "intermediate")
    inter = identity_channel(d) if inter is None else inter

    kind = doc.get("povm", "factored")
    kw = {"name": str(doc.get("name", "")), "fidelity_license": doc.get("fidelity_license")}
    if kind == "factored":
        rule = FactoredPovm()
    elif kind == "recovery":
        rule = RecoveryPovm(ensemble)
    elif kind == "cycle":
        rec, pl = _channel(doc.get("recovery_noise"), d, "recovery_noise")
        from .superops import paulis_for_dim

        paulis = paulis_for_dim(d)
        ptms = []
        for p in paulis:
            omega = unitary_channel(p)
            if rec is None:
                ptms.append(omega.ptm)
            else:
                ptms.append(NoiseModel(rec, None, pl or "in-between").implement(omega)[0].ptm)
        rule = CyclePovm(np.stack(ptms))
    elif kind == "xeb":
        readout = doc.get("readout")
        if readout is None:
            readout = [np.diag(np.eye(d)[x]).astype(complex) for x in range(d)]
        else:
            if not isinstance(readout, list) or len(readout) != d:
                _fail("readout", f"expected {d} readout effects")
            readout = [_povm(r, d, f"readout[{i}]") for i, r in enumerate(readout)]
            if not np.allclose(sum(readout), np.eye(d), atol=1e-9):
                _fail("readout", "effects must sum to the identity")
        ensemble = GateEnsemble(
            [
                type(el)(el.probability, el.ideal, el.impl, Superoperator(el.ideal.ptm.T), el.unitary, el.label)
                for el in ensemble.elements
            ]
        )
        rule = XebPovm(readout)
        inter = dephasing_channel(readout)
        kw.update(prefactor=float(d), offset=-1.0)
    else:
        _fail("povm", f"unknown POVM rule {kind!r}; expected one of {list(POVM_KINDS)}")
    try:
        return URBScheme(ensemble, m0, inter, rho0, rule, **kw)
    except ValueError as exc:
        _fail("", str(exc))


def loads_scheme(text: str, source: str = "") -> URBScheme:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeFileError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno, source=source) from None
    return scheme_from_dict(doc, source)


def load_scheme(path: str | os.PathLike) -> URBScheme:
    with open(path, encoding="utf-8") as fh:
        return loads_scheme(fh.read(), os.fspath(path))


def bundled_scheme_path(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled scheme {name!r}; available: {BUNDLED}")
    return str(resources.files("urb").joinpath("data", f"{name}.json"))


def load_bundled(name: str) -> URBScheme:
    return load_scheme(bundled_scheme_path(name))


def resolve_scheme_path(spec: str) -> str:
    """A file path, or the name of a bundled scheme."""
    if os.path.exists(spec):
        return spec
    if spec in BUNDLED:
        return bundled_scheme_path(spec)
    return spec


def complex_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


# ------------------------------------------------------------------ CSV


def decay_to_csv(ds: DecayDataset) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for m, p, se in zip(ds.m_values, ds.estimates, ds.std_errors):
        w.writerow([m, "%.17g" % p, "%.17g" % se, ds.sequences_per_length, ds.shots_per_sequence, ds.seed])
    return buf.getvalue()


def write_decay_csv(ds: DecayDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(decay_to_csv(ds))


def decay_from_csv(text: str, source: str = "") -> DecayDataset:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise SchemeFileError(f"expected header {','.join(CSV_HEADER)}", line=1, source=source)
    body = [r for r in rows[1:] if r]
    if not body:
        raise SchemeFileError("no data rows", line=2, source=source)
    ms, ps, ses, meta = [], [], [], set()
    for i, r in enumerate(body, start=2):
        if len(r) != len(CSV_HEADER):
            raise SchemeFileError(f"expected {len(CSV_HEADER)} columns", line=i, source=source)
        try:
            ms.append(int(r[0]))
            ps.append(float(r[1]))
            ses.append(float(r[2]))
            meta.add((int(r[3]), int(r[4]), int(r[5])))
        except ValueError as exc:
            raise SchemeFileError(str(exc), line=i, source=source) from None
    if len(meta) != 1:
        raise SchemeFileError("K, shots and seed must be constant across rows", source=source)
    K, shots, seed = meta.pop()
    return DecayDataset(tuple(ms), tuple(ps), tuple(ses), K, shots, seed)


def read_decay_csv(path) -> DecayDataset:
    with open(path, encoding="utf-8") as fh:
        return decay_from_csv(fh.read(), os.fspath(path))
