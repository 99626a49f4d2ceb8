#!/usr/bin/env python3
"""Regenerate the hemoglobin extinction data file.

The table is a smooth monotone-cubic interpolation through anchor points
reconstructed from widely published oxy-/deoxy-hemoglobin molar extinction
compilations. It preserves the canonical features used by spectral
unmixing: the HbO2 double peak (542/577 nm), the single broad Hb peak
(555 nm), near-crossings around 500/522/548/569/586 nm, the steep HbO2
drop past 585 nm, and Hb >> HbO2 in the red. Values are scaled by one
common factor so the global peak is 1.0; saturation ratios are unaffected
by that scaling. The table is representative, not metrological.
"""

from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

# wavelength: (HbO2, Hb), molar-extinction-like units before rescaling
ANCHORS = {
    450: (62816, 103292),
    460: (44480, 72226),
    470: (33209, 48456),
    480: (26629, 33600),
    490: (23684, 26000),
    500: (20932, 20862),
    510: (20035, 19500),
    520: (24202, 23388),
    530: (39956, 28000),
    540: (53236, 39000),
    544: (53292, 43500),
    548: (47800, 47500),
    555: (37020, 53412),
    560: (32613, 53300),
    565: (34639, 50000),
    570: (44932, 47000),
    575: (55540, 41600),
    578: (56112, 38800),
    585: (31620, 32500),
    590: (13500, 27000),
    595: (6321, 20500),
    600: (3200, 14677),
    610: (1506, 9800),
    620: (942, 8200),
    630: (610, 6510),
    640: (442, 4900),
    650: (368, 3750),
}


def main() -> None:
    wl_anchor = np.array(sorted(ANCHORS), dtype=np.float64)
    hbo2_anchor = np.array([ANCHORS[int(w)][0] for w in wl_anchor], dtype=np.float64)
    hb_anchor = np.array([ANCHORS[int(w)][1] for w in wl_anchor], dtype=np.float64)

    grid = np.arange(450, 651, 2, dtype=np.float64)
    hbo2 = PchipInterpolator(wl_anchor, hbo2_anchor)(grid)
    hb = PchipInterpolator(wl_anchor, hb_anchor)(grid)

    scale = max(hbo2.max(), hb.max())
    hbo2 /= scale
    hb /= scale

    out = Path(__file__).resolve().parents[1] / "src" / "hsmosaic" / "data"
    lines = [
        "# Hemoglobin extinction spectra for oxygenation unmixing, 2 nm steps.",
        "# Smooth compilation approximating published HbO2/Hb molar extinction",
        "# tabulations; both species share one scale factor (global peak = 1),",
        "# so saturation ratios match the molar-unit curves. Representative,",
        "# not metrological. Regenerate with tools/make_extinction_table.py.",
        "# columns: wavelength_nm, hbo2, hb",
    ]
    for w, a, b in zip(grid, hbo2, hb):
        lines.append(f"{w:.0f},{a:.8f},{b:.8f}")
    (out / "hemoglobin_extinction_2nm.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(grid)} rows")


if __name__ == "__main__":
    main()
