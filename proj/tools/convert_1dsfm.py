"""Converter stub for 1DSfM-style collections.

Not implemented. A converter must write one view-graph JSON document (see
docs/graph_format.md):

    {
      "version": 1,
      "n": <cameras kept>,
      "initial_rotations": [[w, x, y, z], ...],   # from an external solver
      "gt_rotations": [[w, x, y, z], ...],        # optional, e.g. reference model
      "edges": [{"j": j, "k": k,
                 "bearings_j": [x, y, z, ...],    # K_j^-1 [u, v, 1], normalized
                 "bearings_k": [x, y, z, ...]}]
    }

Steps a converter needs:
  1. Read the reference model's cameras (focal length, radial distortion,
     rotation) and drop cameras without a reconstruction.
  2. Undistort each track observation and turn it into a unit bearing in the
     camera frame, with the camera looking along +z.
  3. For every camera pair sharing at least 10 tracks, emit an edge with the
     pair's bearings in matching order and j < k.
  4. Keep only the largest connected component and reindex cameras.
  5. Convert all rotations to world-to-camera quaternions with w >= 0.
"""

import sys


def main():
    sys.stderr.write("convert_1dsfm: not implemented, see the module docstring\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
