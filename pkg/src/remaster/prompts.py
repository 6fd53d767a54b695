"""Instruction templates for each degradation kind.

Each degradation maps to a list of one-sentence user instructions asking for
the inverse correction. The bank is an editable JSON map kind -> [sentences];
every kind must offer at least MIN_TEMPLATES options.
"""

from __future__ import annotations

import json

MIN_TEMPLATES = 8

_XBAND = [
    "Can you please correct the equalization?",
    "Improve the balance in the audio by fixing the chaotic equalizer, please.",
    "Make this sound balanced, please.",
    "Balance the EQ, please.",
    "Balance the tonal spectrum of the audio.",
    "Correct the unnatural frequency emphasis.",
    "Make the EQ curve smoother and more natural.",
    "Even out the EQ.",
    "Adjust the tonal balance for a more pleasing sound.",
]

_MIC = [
    "This audio was recorded with a phone, can you fix that, please?",
    "Please make this sound better than a phone recording.",
    "Balance the EQ, please.",
    "Improve the balance in this song.",
    "Make the audio sound like it was recorded with a higher-quality microphone.",
    "Reduce the coloration added by the microphone.",
    "Make the tone more neutral and balanced.",
    "Improve the naturalness of the recording.",
    "Remove the harshness or boxiness from the mic coloration.",
]

_CLARITY = [
    "Increase the clarity!",
    "Can you please make this song sound more clear?",
    "Increase the clarity of this song by emphasizing treble frequencies.",
    "Make the audio clearer and more intelligible.",
    "Sharpen the overall sound.",
    "Bring more focus and definition to the details.",
    "Make the mix sound less cloudy.",
    "Tighten the articulation in the sound.",
]

_BRIGHT = [
    "Can you please make this sound brighter?",
    "Increase the brightness!",
    "Make this audio sound brighter by emphasizing the high frequencies.",
    "Add some brightness to the high end.",
    "Make the sound more vivid and lively.",
    "Give the mix more shine and sparkle.",
    "Lift the treble for a more open tone.",
    "Enhance the presence of the upper frequencies.",
]

_DARK = [
    "Make this sound darker!",
    "Can you reduce the brightness, please?",
    "Make the audio darker by suppressing the higher frequencies.",
    "Bring in more low-mid richness to make the sound darker.",
    "Make the tone fuller and less sharp.",
    "Smooth out the highs with deeper low-end support.",
    "Round out the sound with more body.",
    "Soften the harshness with a warmer tone.",
]

_AIRY = [
    "Make this sound more fresh and airy by emphasizing the high end frequencies.",
    "Make this feel more airy, please.",
    "Increase the perceived airiness, please.",
    "Give this a light sense of spaciousness by amplifying the higher frequencies.",
    "Add more air and openness to the sound.",
    "Make the audio feel more spacious and extended.",
    "Enhance the sense of space in the highs.",
    "Lift the top end for a more open character.",
    "Give the mix a breathier, more open feel.",
]

_BOOM = [
    "Make it boom!",
    "Make this song sound more boomy by amplifying the low end bass frequencies.",
    "Increase the boominess, please!",
    "Give me more bass!",
    "Can you make this more bassy, please?",
    "Give the audio more roar and low-end power.",
    "Make the bass more impactful and solid.",
    "Add weight and depth to the bottom end.",
    "Reinforce the low frequencies for more energy.",
    "Boost the bass presence.",
]

_WARM = [
    "Can you make this song sound warmer, please?",
    "Increase the warmth, please.",
    "Emphasize the bass and low-mid frequencies to give this a more warm feel.",
    "Make the sound warmer and more inviting.",
    "Add some low-mid warmth to the mix.",
    "Soften the tone with a bit more body.",
    "Give the audio a warm analog feel.",
    "Enhance the warmth for a fuller sound.",
]

_MUD = [
    "Can you make this song sound less muddy, please?",
    "Decrease the muddiness!",
    "Reduce the level of muddiness in this audio by lowering the low-mid frequencies.",
    "Clean up the muddiness in the low-mids.",
    "Make the mix sound less boxy and congested.",
    "Improve definition by reducing mud.",
    "Clear up the low-mid buildup.",
    "Make the audio tighter and less murky.",
]

_VOCAL = [
    "Raise the level of the vocals, please.",
    "Can you amplify the vocals, please?",
    "Emphasize the vocals by raising the level of the mid frequencies specific for vocals.",
    "Bring the vocals forward in the mix.",
    "Make the voice clearer and more present.",
    "Increase the vocal presence by enhancing the midrange.",
    "Make the vocals stand out more.",
    "Strengthen the vocal clarity and focus.",
]

_COMP = [
    "Increase the dynamic range.",
    "Decompress the audio, please.",
    "Remove the compression, please.",
    "Can you fix the strong compression effect in this audio by expanding the dynamic range?",
    "Restore the dynamics of the audio.",
    "Make the sound less squashed and more open.",
    "Reduce the over-compression for a more natural feel.",
    "Bring back the contrast in volume.",
    "Let the audio breathe more and improve the dynamics.",
]

_PUNCH = [
    "Give this song a punch!",
    "Make the transients sharper, please.",
    "Increase the punchiness of the song by emphasizing the transients.",
    "Make the audio more punchy and energetic.",
    "Bring back the snap and attack of transients.",
    "Add more impact and dynamic punch to the sound.",
    "Make drums and hits sound more aggressive and tight.",
    "Increase the percussive clarity and definition.",
]

_REVERB = [
    "Can you remove the excess reverb in this audio, please?",
    "Please, dereverb this audio.",
    "Remove the echo!",
    "Please, reduce the strong echo in this song.",
    "Remove the church effect, please.",
    "Clean this off any echoes!",
    "This song has too much reverb present, can you reduce it?",
    "Make the audio sound more dry and direct.",
    "Reduce the roominess or echo.",
    "Remove excess reverb and make it sound cleaner.",
    "Bring the sound closer and more focused.",
    "Tighten the spatial feel of the audio.",
]

_VOLUME = [
    "The volume is low, make this louder please!",
    "Can you make this sound louder, please?",
    "Increase the amplitude.",
    "Normalize the audio volume.",
    "Make the audio louder and more powerful.",
    "Increase the overall level.",
    "Boost the volume without distorting the signal.",
    "Raise the loudness to a comfortable level, please.",
]

_CLIP = [
    "This audio is clipping, can you please remove it?",
    "Remove the loud hissing in this song?",
    "Remove the clipping.",
    "Reduce the clipping and reconstruct lost audio.",
    "Clean up noisiness.",
    "Make the audio smoother and less distorted.",
    "Reduce the gritty or crushed character.",
    "Fix digital distortion.",
]

_STEREO = [
    "Make it sound spacious!",
    "Can you make this audio stereo, please?",
    "Alter left/right channels to give spatial feel.",
    "Widen the stereo image.",
    "Add depth and separation between left and right.",
    "Enhance the stereo field for immersive sound.",
    "Give the track a wider sense of space.",
    "Spread the instruments across the stereo field.",
]

# The four room kinds share the reverb instruction list.
DEFAULT_PROMPT_BANK: dict[str, list[str]] = {
    "xband": _XBAND,
    "mic": _MIC,
    "bright": _BRIGHT,
    "dark": _DARK,
    "airy": _AIRY,
    "boom": _BOOM,
    "clarity": _CLARITY,
    "mud": _MUD,
    "warm": _WARM,
    "vocal": _VOCAL,
    "comp": _COMP,
    "punch": _PUNCH,
    "small": _REVERB,
    "big": _REVERB,
    "mix": _REVERB,
    "real": _REVERB,
    "clip": _CLIP,
    "volume": _VOLUME,
    "stereo": _STEREO,
}


class PromptBankError(ValueError):
    pass


def validate_prompt_bank(bank: dict[str, list[str]]) -> None:
    for kind, sentences in bank.items():
        if len(sentences) < MIN_TEMPLATES:
            raise PromptBankError(f"kind {kind!r} has {len(sentences)} templates, needs >= {MIN_TEMPLATES}")
        if any(not s.strip() for s in sentences):
            raise PromptBankError(f"kind {kind!r} contains an empty template")


def default_prompt_bank() -> dict[str, list[str]]:
    return {k: list(v) for k, v in DEFAULT_PROMPT_BANK.items()}


def write_prompt_bank(path, bank: dict[str, list[str]] | None = None) -> None:
    bank = bank if bank is not None else default_prompt_bank()
    validate_prompt_bank(bank)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(bank, f, indent=2, ensure_ascii=False)
        f.write("\n")


def load_prompt_bank(path) -> dict[str, list[str]]:
    with open(path, encoding="utf-8") as f:
        bank = json.load(f)
    validate_prompt_bank(bank)
    return bank
