"""When does packaging pay off? Sweep prompt length against base image size.

For each built-in profile, prints the cost change of packaging a prompt of
n words above a base image, using the real renderer and token formulas.
"""

import argparse

import numpy as np

from ippg.packager import RenderConfig
from ippg.providers import BUILTIN_PROFILES, Mode, build_request, compare
from ippg.tokenomics import format_usd

SIZES = [(512, 300), (512, 512), (1024, 768), (1500, 1000)]
WORDS = [5, 20, 80, 320]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=float, default=20, help="font size in points")
    args = ap.parse_args()
    config = RenderConfig(size_pt=args.size)

    for name, profile in BUILTIN_PROFILES.items():
        print(f"\n{name}")
        print(f"{'image':>10} {'words':>6} {'n_text':>7} {'d_img':>6} {'cheaper':>8} {'savings_usd':>12}")
        for w, h in SIZES:
            base = np.full((h, w, 3), 230, dtype=np.uint8)
            for n in WORDS:
                prompt = " ".join(["figure"] * n)
                b = build_request(profile, "", prompt, [base], Mode.BASELINE)
                p = build_request(profile, "", prompt, [base], Mode.IPPG, config)
                c = compare(profile, b, p)
                print(
                    f"{w:>5}x{h:<4} {n:>6} {c.counts.input_text:>7} {c.verdict.delta_image_tokens:>6} "
                    f"{'yes' if c.verdict.cheaper else 'no':>8} {format_usd(c.savings):>12}"
                )


if __name__ == "__main__":
    main()
