"""Text formats for states and stage lists used on the command line.

States::

    bell:xy            Bell state Psi_xy
    comp:0110          computational basis state
    amp:re,im;re,im;.. amplitudes in basis order, normalized on parse

Stage lists are comma-separated gate names (``I,X,Y,Z,H``) or bracketed
row-major 2x2 matrices ``[re,im;re,im;re,im;re,im]``.
"""
from __future__ import annotations

import re

import numpy as np

from ctcsim.kernel import NAMED_GATES, BellLabel, basis_state, bell_state
from ctcsim.linalg import num_qubits


class SpecError(ValueError):
    pass


def _complex_list(body: str) -> np.ndarray:
    vals = []
    for part in body.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = [b.strip() for b in part.split(",")]
        if len(bits) not in (1, 2):
            raise SpecError(f"bad amplitude {part!r}; expected 're,im'")
        try:
            re_, im = float(bits[0]), float(bits[1]) if len(bits) == 2 else 0.0
        except ValueError as exc:
            raise SpecError(f"bad amplitude {part!r}") from exc
        vals.append(complex(re_, im))
    return np.array(vals, dtype=np.complex128)


def parse_state(text: str) -> np.ndarray:
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise SpecError(f"state spec {text!r} needs a 'kind:' prefix (bell, comp, amp)")
    kind = kind.lower()
    try:
        if kind == "bell":
            return bell_state(BellLabel.parse(body))
        if kind == "comp":
            if not body or any(c not in "01" for c in body):
                raise SpecError(f"comp state needs a bit string, got {body!r}")
            return basis_state(body)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    if kind == "amp":
        v = _complex_list(body)
        if v.size == 0:
            raise SpecError("amp state has no amplitudes")
        try:
            num_qubits(v)
        except ValueError as exc:
            raise SpecError(f"{v.size} amplitudes is not a power of two") from exc
        norm = np.linalg.norm(v)
        if norm == 0:
            raise SpecError("amp state is the zero vector")
        return v / norm
    raise SpecError(f"unknown state kind {kind!r}")


_TOKEN = re.compile(r"\[[^\]]*\]|[^,\s]+")


def parse_stages(text: str) -> list[np.ndarray]:
    text = text.strip()
    if not text:
        return []
    stages = []
    for tok in _TOKEN.findall(text):
        if tok.startswith("["):
            m = _complex_list(tok[1:-1])
            if m.size != 4:
                raise SpecError(f"stage matrix {tok} needs 4 entries")
            stages.append(m.reshape(2, 2))
        elif tok.upper() in NAMED_GATES and NAMED_GATES[tok.upper()].shape == (2, 2):
            stages.append(NAMED_GATES[tok.upper()].copy())
        else:
            raise SpecError(f"unknown stage {tok!r}")
    return stages
