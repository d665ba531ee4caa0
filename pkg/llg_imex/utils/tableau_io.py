"""
Plain-text tableau files

    # comment
    s = 4
    A = 0 0 0 0; 0 0.625 0 0; ...
    A_tilde = 0 0 0 0; 0.625 0 0 0; ...
    b = 0 0.085 0.68187464 0.23312535
    c = 0 0.625 0.31347352 1

b_tilde, c and c_tilde are optional (b_tilde = b, c and c_tilde default to
row sums). Entries may be separated by spaces or commas.
"""

import os
import re
from typing import Dict, List, Optional

import numpy as np

from ..errors import InvalidTableauError, TableauParseError
from ..models.tableau import ImexTableau

REQUIRED_KEYS = ("s", "A", "A_tilde", "b")
OPTIONAL_KEYS = ("b_tilde", "c", "c_tilde", "name")

_SEPARATOR = re.compile(r"[\s,]+")


def _parse_vector(key: str, raw: str) -> List[float]:
    tokens = [tok for tok in _SEPARATOR.split(raw.strip()) if tok]
    try:
        return [float(tok) for tok in tokens]
    except ValueError as exc:
        raise TableauParseError(f"{key}: {exc}") from exc


def _parse_matrix(key: str, raw: str) -> List[List[float]]:
    return [_parse_vector(key, row) for row in raw.split(";") if row.strip()]


def parse_tableau(text: str, name: Optional[str] = None) -> ImexTableau:
    """
    Parse key=value blocks into an ImexTableau

    Raises:
        TableauParseError: Unknown or missing keys, bad numbers, wrong sizes
    """
    entries: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TableauParseError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise TableauParseError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise TableauParseError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    missing = [key for key in REQUIRED_KEYS if key not in entries]
    if missing:
        raise TableauParseError(f"missing keys: {', '.join(missing)}")

    try:
        s = int(entries["s"])
    except ValueError:
        raise TableauParseError(f"s must be an integer, got {entries['s']!r}")

    a_implicit = _parse_matrix("A", entries["A"])
    a_explicit = _parse_matrix("A_tilde", entries["A_tilde"])
    for key, matrix in (("A", a_implicit), ("A_tilde", a_explicit)):
        if len(matrix) != s or any(len(row) != s for row in matrix):
            raise TableauParseError(f"{key} must be {s}x{s}")

    vectors = {}
    for key in ("b", "b_tilde", "c", "c_tilde"):
        if key in entries:
            vectors[key] = _parse_vector(key, entries[key])
            if len(vectors[key]) != s:
                raise TableauParseError(f"{key} must have {s} entries, got {len(vectors[key])}")

    try:
        return ImexTableau.from_coefficients(
            a_implicit, a_explicit, vectors["b"],
            b_tilde=vectors.get("b_tilde"),
            c=vectors.get("c"),
            c_tilde=vectors.get("c_tilde"),
            name=name or entries.get("name", "file"),
        )
    except InvalidTableauError as exc:
        raise TableauParseError(str(exc)) from exc


def load_tableau(path: str) -> ImexTableau:
    if not os.path.isfile(path):
        raise TableauParseError(f"tableau file not found: {path}")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_tableau(text, name=os.path.splitext(os.path.basename(path))[0])


def format_tableau(t: ImexTableau, digits: int = 17) -> str:
    def vec(values: np.ndarray) -> str:
        return " ".join(f"{v:.{digits}g}" for v in values)

    def mat(values: np.ndarray) -> str:
        return "; ".join(vec(row) for row in values)

    return "\n".join([
        f"# {t.name}",
        f"name = {t.name}",
        f"s = {t.s}",
        f"A = {mat(t.a_implicit)}",
        f"A_tilde = {mat(t.a_explicit)}",
        f"b = {vec(t.b)}",
        f"b_tilde = {vec(t.b_tilde)}",
        f"c = {vec(t.c)}",
        f"c_tilde = {vec(t.c_tilde)}",
    ]) + "\n"


def save_tableau(t: ImexTableau, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_tableau(t))
    return path
