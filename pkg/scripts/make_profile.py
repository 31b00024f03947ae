#!/usr/bin/env python3
"""Generate the shipped synthetic drive-cycle current profile.

Produces ``src/thermsafe/data/udds_current.csv``: a 1 Hz, 1500 s series of
demand-current bursts shaped like an urban drive cycle (idle segments,
acceleration bursts up to ~380 A, cruise plateaus, short regeneration dips).
The output is deterministic (fixed seed) and committed; this script exists
to document how the artifact was made and to regenerate it if needed.
"""

import csv
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "thermsafe" / "data" / "udds_current.csv"

DURATION_S = 1500
SEED = 20260815


def main() -> None:
    rng = np.random.default_rng(SEED)
    t = np.arange(DURATION_S + 1, dtype=float)
    current = np.full(t.size, 3.0)  # idle draw

    # acceleration bursts: trapezoidal pulses with jittered spacing/height
    pos = 10.0
    while pos < DURATION_S - 60:
        ramp = rng.uniform(3, 8)
        hold = rng.uniform(6, 25)
        peak = rng.uniform(60, 380)
        for k, tt in enumerate(t):
            if pos <= tt < pos + ramp:
                current[k] = max(current[k], peak * (tt - pos) / ramp)
            elif pos + ramp <= tt < pos + ramp + hold:
                current[k] = max(current[k], peak)
            elif pos + ramp + hold <= tt < pos + 2 * ramp + hold:
                current[k] = max(
                    current[k], peak * (pos + 2 * ramp + hold - tt) / ramp
                )
        # short regeneration dip after some decelerations
        if rng.random() < 0.4:
            dip_start = pos + 2 * ramp + hold
            dip_len = rng.uniform(2, 6)
            depth = rng.uniform(5, 40)
            mask = (t >= dip_start) & (t < dip_start + dip_len)
            current[mask] = -depth
        pos += 2 * ramp + hold + rng.uniform(15, 70)

    current = np.round(current, 3)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", "current_A"])
        for tt, ii in zip(t, current):
            writer.writerow([repr(float(tt)), repr(float(ii))])
    print(f"wrote {OUT} ({t.size} rows, peak {current.max():.1f} A, "
          f"mean {current.mean():.1f} A, rms {np.sqrt((current**2).mean()):.1f} A)")


if __name__ == "__main__":
    main()
