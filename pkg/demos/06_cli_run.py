"""Drive the batch front door programmatically.

Writes a YAML config, invokes the CLI entry point in-process, and lists what
lands in the output directory. The same config works from a shell:

    critfield --config clt.yaml --out runs/demo
    critfield --plot-data runs/demo zeta-hist
"""

import tempfile
from pathlib import Path

from critfield.cli import emit_plot_data, main

CONFIG = """
subcommand: clt
seed: 11
density:
  family: gaussian
  params: [1.0]
experiment:
  m: 2
  n_list: [3.0, 5.0]
  realizations: 30
  points_per_unit: 8
  e_absdet_s1: 2.30936836
budget:
  grid_points: 2000000
"""


def run():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "clt.yaml"
        cfg.write_text(CONFIG)
        out = Path(tmp) / "run"
        code = main(["--config", str(cfg), "--out", str(out)])
        print(f"\nexit code {code}; files written:")
        for p in sorted(out.rglob("*")):
            print(f"  {p.relative_to(out)}")
        csv_path = emit_plot_data(out, "zeta-hist")
        print(f"\nplot data: {csv_path.name}")
        print(csv_path.read_text().splitlines()[0])


if __name__ == "__main__":
    run()
