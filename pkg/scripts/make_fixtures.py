"""Regenerate the test fixtures in tests/data from scikit-image's bundled camera photo."""
from pathlib import Path

from skimage import data

from hypersync.imaging import write_pgm

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main():
    cam = data.camera()           # 512 x 512 uint8
    small = cam[::2, ::2]         # 256 x 256
    write_pgm(DATA / "cameraman256.pgm", small)
    # 64 x 64 crop around the head and camera
    write_pgm(DATA / "cameraman64.pgm", small[40:104, 90:154])
    print("wrote", sorted(p.name for p in DATA.glob("*.pgm")))


if __name__ == "__main__":
    main()
