"""Paired-dataset construction.

Builds a tiny corpus of synthetic songs, then runs the full pipeline:
30 s excerpt extraction, 7 variant plans per clip (4 single / 2 double /
1 triple degradation), prompt composition, hidden clipping, peak
normalization, and a JSONL manifest.
"""

import json
from pathlib import Path

from remaster import build_dataset, synthesize_music, write_wav

ROOT = Path(__file__).parent / "output" / "dataset"
CORPUS = ROOT / "corpus"
CORPUS.mkdir(parents=True, exist_ok=True)

print("synthesizing a 4-song corpus (43 s each)...")
for i in range(4):
    write_wav(synthesize_music(43.0, seed=100 + i), CORPUS / f"song{i}.wav")

manifest = build_dataset(CORPUS, ROOT / "dataset", seed=2024, workers=1)
rows = [json.loads(line) for line in open(manifest) if line.strip()]

print(f"\nmanifest: {manifest} ({len(rows)} rows)")
print(f"{'clip':<8} {'v':>2} {'effects':<28} {'hidden':<7} {'norm':<6} prompt (variant 1 of 2)")
print("-" * 110)
for row in rows:
    effects = "+".join(e["kind"] for e in row["effects"] if not e["hidden"])
    norm = "-" if row["normalization_peak"] is None else f"{row['normalization_peak']:.2f}"
    print(f"{row['clip_id']:<8} {row['variant_index']:>2} {effects:<28} "
          f"{str(row['hidden_clipping']):<7} {norm:<6} {row['prompts'][0][:48]}")

n_hidden = sum(r["hidden_clipping"] for r in rows)
print(f"\n{n_hidden} variant(s) carry hidden clipping (no matching instruction in the prompt).")
print("rebuilding with the same seed reproduces every byte; per-clip RNG streams")
print("are keyed by clip id, so corpus ordering does not matter.")
