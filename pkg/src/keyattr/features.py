"""Per-column feature extraction.

Nine numeric descriptors per column: five character-class ratios, mean cell
length, mean word count, and two uniqueness measures. Character classes are
ASCII-anchored: a-z, A-Z, 0-9, space/tab, and everything else (symbols,
including non-ASCII). Feature order is fixed and shared with the classifier
and its serialized models.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

FEATURE_NAMES = (
    "f_s_letters",
    "f_l_letters",
    "f_digits",
    "f_spaces",
    "f_symbols",
    "f_chars",
    "f_words",
    "f_r_unique",
    "f_m_unique",
)


@dataclass
class FeatureVector:
    f_s_letters: float
    f_l_letters: float
    f_digits: float
    f_spaces: float
    f_symbols: float
    f_chars: float
    f_words: float
    f_r_unique: float
    f_m_unique: float

    def as_list(self) -> list[float]:
        return [getattr(self, name) for name in FEATURE_NAMES]

    @classmethod
    def from_list(cls, values) -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError("expected %d features, got %d" % (len(FEATURE_NAMES), len(values)))
        return cls(*[float(v) for v in values])


_SMALL, _LARGE, _DIGIT, _SPACE, _SYMBOL = 0, 1, 2, 3, 4


def _build_class_table() -> bytes:
    table = bytearray([_SYMBOL]) * 256
    for code in range(ord("a"), ord("z") + 1):
        table[code] = _SMALL
    for code in range(ord("A"), ord("Z") + 1):
        table[code] = _LARGE
    for code in range(ord("0"), ord("9") + 1):
        table[code] = _DIGIT
    table[ord(" ")] = _SPACE
    table[ord("\t")] = _SPACE
    return bytes(table)


_CLASS_TABLE = _build_class_table()
_SPACE_BYTE = bytes([_SPACE])
_NP_CLASS_TABLE = np.frombuffer(_CLASS_TABLE, dtype=np.uint8)


def _cell_profile(cell: str) -> tuple[float, float, float, float, float, int, int]:
    """(five class ratios, char count, word count) for one cell.

    An empty cell contributes zero to every ratio. Words are maximal runs of
    non-space/tab characters; the split class matches the space feature class.
    """
    n = len(cell)
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0, 0.0, 0, 0)
    if cell.isascii():
        # One byte per character, so byte counts equal character counts.
        classes = cell.encode("ascii").translate(_CLASS_TABLE)
        small = classes.count(_SMALL)
        large = classes.count(_LARGE)
        digit = classes.count(_DIGIT)
        space = classes.count(_SPACE)
        symbol = n - small - large - digit - space
        if space == 0:
            words = 1
        else:
            words = sum(1 for run in classes.split(_SPACE_BYTE) if run)
    else:
        small = large = digit = space = symbol = 0
        for ch in cell:
            if "a" <= ch <= "z":
                small += 1
            elif "A" <= ch <= "Z":
                large += 1
            elif "0" <= ch <= "9":
                digit += 1
            elif ch == " " or ch == "\t":
                space += 1
            else:
                symbol += 1
        words = 0
        in_word = False
        for ch in cell:
            if ch == " " or ch == "\t":
                in_word = False
            elif not in_word:
                words += 1
                in_word = True
    return (small / n, large / n, digit / n, space / n, symbol / n, n, words)


def local_features(cells: list[str]) -> tuple[float, float, float, float, float, float, float]:
    """Mean per-cell ratios and counts over a column.

    Empty cells stay in the denominator (all-zero profiles), so the five
    ratio means sum to 1 only when no cell is empty.
    """
    if not cells:
        raise ValueError("empty column")
    # Profiles depend only on the cell value; columns with repeated values
    # (ids, categories) are summarized per distinct value. ASCII values are
    # further batched by length so class counting runs on whole matrices.
    # The batched path works in integers until the final divisions, so the
    # result does not depend on how values land in batches.
    counts = Counter(cells)
    by_len: dict[int, tuple[list[bytes], list[int]]] = {}
    t_small = t_large = t_digit = t_space = t_symbol = t_chars = t_words = 0.0
    for value, mult in counts.items():
        if value and value.isascii():
            encoded, mults = by_len.setdefault(len(value), ([], []))
            encoded.append(value.encode("ascii"))
            mults.append(mult)
        else:
            small, large, digit, space, symbol, chars, words = _cell_profile(value)
            t_small += small * mult
            t_large += large * mult
            t_digit += digit * mult
            t_space += space * mult
            t_symbol += symbol * mult
            t_chars += chars * mult
            t_words += words * mult
    for length, (encoded, mults) in by_len.items():
        if len(encoded) == 1:
            # Matrix setup costs more than it saves on a single value.
            small, large, digit, space, symbol, chars, words = _cell_profile(
                encoded[0].decode("ascii")
            )
            mult = mults[0]
            t_small += small * mult
            t_large += large * mult
            t_digit += digit * mult
            t_space += space * mult
            t_symbol += symbol * mult
            t_chars += chars * mult
            t_words += words * mult
            continue
        weights = np.asarray(mults, dtype=np.int64)
        total = int(weights.sum())
        rows = np.frombuffer(b"".join(encoded), dtype=np.uint8)
        classes = _NP_CLASS_TABLE[rows].reshape(len(encoded), length)
        small = int((classes == _SMALL).sum(axis=1) @ weights)
        large = int((classes == _LARGE).sum(axis=1) @ weights)
        digit = int((classes == _DIGIT).sum(axis=1) @ weights)
        space = int((classes == _SPACE).sum(axis=1) @ weights)
        nonspace = classes != _SPACE
        starts = nonspace.copy()
        starts[:, 1:] &= ~nonspace[:, :-1]
        words = int(starts.sum(axis=1) @ weights)
        t_small += small / length
        t_large += large / length
        t_digit += digit / length
        t_space += space / length
        t_symbol += (length * total - small - large - digit - space) / length
        t_chars += length * total
        t_words += words
    n = len(cells)
    return (
        t_small / n,
        t_large / n,
        t_digit / n,
        t_space / n,
        t_symbol / n,
        t_chars / n,
        t_words / n,
    )


def global_features(cells: list[str]) -> tuple[float, float]:
    """(f_r_unique, f_m_unique) = (U/n, n/U) over the cell multiset.

    The empty string counts as a value like any other, so the two features
    multiply to exactly 1.
    """
    if not cells:
        raise ValueError("empty column")
    unique = len(set(cells))
    n = len(cells)
    return (unique / n, n / unique)


def column_features(cells: list[str]) -> FeatureVector:
    local = local_features(cells)
    r_unique, m_unique = global_features(cells)
    return FeatureVector(*local, r_unique, m_unique)


def featurize_log(log) -> list[FeatureVector]:
    """One FeatureVector per column, in column order."""
    return [column_features(cells) for _, cells in log.columns]
