"""remaster: degradation synthesis, objective metrics, and text-conditioned
rectified-flow restoration for music, at desk scale."""

from .audio import (DEFAULT_SAMPLE_RATE, AudioError, SpectralConfig, Spectrogram, Waveform,
                    load_audio, mel_spectrogram, mid_side, peak_normalize, read_wav,
                    resample, stft, write_wav)
from .banks import Banks, IrBank, default_banks, load_banks
from .degrade import (CATEGORY, Category, DegradationKind, DegradationRecord,
                      apply_degradation, fold_stereo, sample_params)
from .dataset import (ManifestRow, VariantPlan, build_dataset, compose_prompt,
                      extract_excerpt, render_variant, sample_variant_plans)
from .flow import (AudioCue, FlowBatch, FlowConfig, LatentSeq, PromptEmbedding,
                   TemplateVocab, VelocityModel, decode_latent, encode_latent,
                   load_checkpoint, make_training_example, sample_timestep,
                   save_checkpoint, train_step, velocity_forward)
from .metrics import (BandSpec, MetricReport, band_energy_ratio, evaluate_dataset,
                      frame_rms_std, global_rms, mel_ssim, metric_error,
                      modulation_spectrum_distance, onset_strength_mean,
                      spectral_balance_distance, spectral_flatness_mean, stereo_width)
from .restore import ChunkPlan, SolverConfig, integrate, restore_segment, restore_song
from .synth import pink_click_test_signal, synthesize_music

__version__ = "0.1.0"
