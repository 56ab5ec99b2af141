"""Answer "can this lens/sensor combination see that object at all?".

Given an object size, a distance, a focal length, and the sensor's pixel
pitch, the thin-lens model predicts how many pixels the object spans. Below
about 3 px an event sensor cannot reliably detect it, let alone classify it.
"""

from evfuse import (
    MIN_DETECTABLE_PX,
    crop_factor,
    effective_focal,
    field_of_view,
    get_lenses,
    get_sensor,
    object_extent_px,
)

evk4 = get_sensor("evk4")
ximea = get_sensor("ximea")
print(f"event sensor: {evk4.name}  {evk4.width}x{evk4.height} @ {evk4.pitch_um} um pitch")
print(f"frame sensor: {ximea.name}  {ximea.width}x{ximea.height} @ {ximea.pitch_um} um pitch")

print("\n30 cm drone, EVK4, three focal lengths:")
print(f"  {'focal':>6s} {'100 m':>8s} {'300 m':>8s} {'350 m':>8s}")
for focal in (8, 35, 100):
    row = [object_extent_px(0.30, d, focal, evk4.pitch_um) for d in (100, 300, 350)]
    mark = ["" if px >= MIN_DETECTABLE_PX else " (!)" for px in row]
    print(f"  {focal:4d}mm " + " ".join(f"{px:6.1f}px{m:4s}" for px, m in zip(row, mark)))
print(f"  (!) below the {MIN_DETECTABLE_PX:.0f} px detectability floor")

ratio = crop_factor(ximea, evk4)
print(f"\ncrop factor {ximea.name} -> {evk4.name}: {ratio:.3f}")
print("a lens on the smaller sensor frames like a longer lens on the big one:")
for focal in (8, 35, 50, 75, 100):
    print(f"  {focal:4d} mm behaves like {effective_focal(focal, ratio):6.1f} mm")

fov = field_of_view(evk4, 8.0)
print(f"\nEVK4 with an 8 mm lens sees {fov.horizontal_deg:.1f} deg x {fov.vertical_deg:.1f} deg")

print("\nbundled lens presets for the event camera:")
for lens in get_lenses("evk4"):
    print(f"  {lens.model:22s} {lens.focal_mm:6.1f} mm")
