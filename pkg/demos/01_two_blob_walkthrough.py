"""Two candidate lesions, one exact count distribution.

The demo volume renders two radial blobs whose peak probabilities are 0.78
and 0.51. A plain connected-component count answers "how many lesions?"
with a single integer that flips between thresholds; the probability-
weighted count answers with a distribution that stays put.
"""

import numpy as np

import pbcount as pc


def main():
    vol = pc.two_blob_demo_volume()
    print(f"volume shape {vol.shape}, max {vol.data.max():.2f}")

    print("\nconnected-component count by threshold:")
    for tau in (0.3, 0.5, 0.6, 0.8):
        n = pc.cc_count(vol, pc.LabelingConfig(tau=tau))
        print(f"  tau={tau:.1f}  cc_count={n}")

    print("\nexact count distribution by threshold:")
    for tau in (0.1, 0.2, 0.3, 0.4, 0.5):
        result = pc.count_volume(vol, pc.LabelingConfig(tau=tau))
        probs = ", ".join(f"{p:.4f}" for p in result.binned.bin_probs)
        print(f"  tau={tau:.1f}  P(count)=[{probs}]  argmax={result.argmax_count}")

    result = pc.count_volume(vol, pc.LabelingConfig(tau=0.1))
    print("\nregion detail at tau=0.1:")
    for region in pc.regions_to_json(result.regions, vol.shape):
        print(f"  region {region['id']}: size {region['size']}, "
              f"peak {region['existence_prob']:.2f} at {region['argmax']}")
    print(f"\nexpected count {result.expected_count:.2f} "
          f"(= 0.78 + 0.51), normalized entropy {result.normalized_entropy:.3f}")
    print("the distribution never contradicts the segmentation map: "
          "it is computed from the same voxels the regions were read from")


if __name__ == "__main__":
    main()
