"""A tour of the 19 degradation functions.

Synthesizes a short music-like clip, applies one degradation of each
category, and shows what got recorded and how the matching objective
metric moved. Degraded audio lands in demos/output/ for listening.
"""

import json
from pathlib import Path

import numpy as np

from remaster import synthesize_music, write_wav
from remaster.banks import default_banks
from remaster.degrade import CATEGORY, DegradationKind, apply_degradation
from remaster.metrics import metric_error

OUT = Path(__file__).parent / "output" / "degradations"
OUT.mkdir(parents=True, exist_ok=True)

clean = synthesize_music(12.0, seed=42)
write_wav(clean, OUT / "clean.wav")
print(f"clean clip: {clean.duration:.1f}s stereo at {clean.sample_rate} Hz, peak {clean.peak:.2f}")
print()

banks = default_banks()  # synthetic mic transfer functions + simulated room IRs
rng = np.random.default_rng(7)

print(f"{'kind':<8} {'category':<10} {'metric error vs clean':>22}   sampled parameters")
print("-" * 100)
for kind in DegradationKind:
    result = apply_degradation(clean, kind, rng, banks)
    if result is None:
        print(f"{kind.value:<8} {CATEGORY[kind].value:<10} {'(not eligible)':>22}")
        continue
    degraded, record = result
    err = metric_error(kind, degraded, clean)
    write_wav(degraded, OUT / f"{kind.value}.wav")
    shown = {k: (round(v, 3) if isinstance(v, float) else v)
             for k, v in list(record.params.items())[:4]}
    print(f"{kind.value:<8} {CATEGORY[kind].value:<10} {err:>22.5f}   {json.dumps(shown)}")

print()
print(f"wrote clean + degraded clips to {OUT}")
print("each degradation preserves length, stereo layout, and sample rate;")
print("records store every sampled parameter so degradations are reproducible.")
