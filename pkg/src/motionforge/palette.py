"""Blob color selection.

Track identities are carried by color, so palettes must stay pairwise
separated in RGB space. Sampling is rejection-based: uniform draws are
accepted only when far enough from every color already chosen.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

# Euclidean separation floor in RGB space. Large enough to keep 64
# colors visually distinct, small enough that rejection stays cheap.
MIN_RGB_DISTANCE = 0.15

MAX_PALETTE = 64

# Fixed order used by the interactive editor before falling back to
# random colors: red, green, blue, cyan, magenta, yellow, white.
GUI_PALETTE: tuple[tuple[float, float, float], ...] = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 1.0, 1.0),
    (1.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
    (1.0, 1.0, 1.0),
)

_MAX_TRIES_PER_COLOR = 100_000


def distinct_colors(
    n: int,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    avoid: tuple[tuple[float, float, float], ...] = (),
) -> list[tuple[float, float, float]]:
    """Sample ``n`` random RGB colors, pairwise >= MIN_RGB_DISTANCE apart.

    Also keeps the required distance from any colors in ``avoid``.
    Deterministic given a seed or generator.
    """
    if n < 1 or n > MAX_PALETTE:
        raise PreconditionError(f"palette size must be in [1, {MAX_PALETTE}], got {n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    chosen = np.asarray(avoid, dtype=np.float64).reshape(-1, 3)
    out: list[tuple[float, float, float]] = []
    for _ in range(n):
        for _ in range(_MAX_TRIES_PER_COLOR):
            c = rng.uniform(0.0, 1.0, size=3)
            if chosen.size == 0 or np.min(np.linalg.norm(chosen - c, axis=1)) >= MIN_RGB_DISTANCE:
                out.append((float(c[0]), float(c[1]), float(c[2])))
                chosen = np.vstack([chosen, c])
                break
        else:  # pragma: no cover - needs adversarial avoid lists
            raise PreconditionError(
                f"could not place {n} colors at separation {MIN_RGB_DISTANCE}"
            )
    return out


def editor_color(index: int, seed: int = 0) -> tuple[float, float, float]:
    """Color of the ``index``-th track created in the editor.

    The first seven come from the fixed GUI palette; later tracks get
    seeded random colors kept distinct from the palette and from each
    other.
    """
    if index < 0:
        raise PreconditionError("index must be >= 0")
    if index < len(GUI_PALETTE):
        return GUI_PALETTE[index]
    overflow = distinct_colors(index - len(GUI_PALETTE) + 1, seed=seed, avoid=GUI_PALETTE)
    return overflow[-1]
