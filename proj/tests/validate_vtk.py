"""Load adcinv VTK output with meshio and check cells and point data."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

try:
    import meshio
except ImportError:
    print("meshio not available, skipping")
    sys.exit(77)

exe = sys.argv[1]
work = Path(tempfile.mkdtemp(prefix="adc_vtk_"))
cfg = work / "fw.json"
cfg.write_text(json.dumps({"phantom": {"resolution": 4}, "dt": 0.24, "steps": 3,
                           "boundary": {"type": "manufactured"}}))
subprocess.run([exe, "forward", "--config", str(cfg), "--out", str(work / "out")], check=True)

m = meshio.read(work / "out" / "fields" / "final_state.vtk")
assert len(m.points) == 125, len(m.points)
tets = [c for c in m.cells if c.type == "tetra"]
assert len(tets) == 1 and len(tets[0].data) == 384
assert "u" in m.point_data and len(m.point_data["u"]) == 125
assert "subdomain" in m.cell_data
labels = set(int(v) for v in m.cell_data["subdomain"][0])
assert labels == {1, 2, 3}, labels
print("meshio read ok")
