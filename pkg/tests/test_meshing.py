import math

import numpy as np
import pytest

from robinsym.domains import build_domain, parse_domain_spec
from robinsym.meshing import (
    MeshError,
    UnsupportedDomainError,
    export_mesh_text,
    generate_mesh,
    import_mesh_text,
    refine_mesh,
    validate_mesh,
)


def test_square_tensor_grid_counts():
    m = generate_mesh(build_domain("rect", w=1.0, h=1.0), 0.25)
    assert m.num_nodes == 25
    assert len(m.triangles) == 32
    assert len(m.boundary_edges) == 16


def test_disc_mesh_area_accuracy():
    d = build_domain("disc", r=1.0)
    m = generate_mesh(d, 0.1)
    assert abs(m.area() - math.pi) < 1e-3
    assert abs(m.boundary_length() - 2 * math.pi) < 2e-3


def test_ellipse_boundary_nodes_on_curve():
    d = build_domain("ellipse", a=2.0, b=0.5)
    m = generate_mesh(d, 0.1)
    bn = m.boundary_nodes()
    x, y = m.nodes[bn, 0], m.nodes[bn, 1]
    assert np.max(np.abs((x / 2.0) ** 2 + (y / 0.5) ** 2 - 1.0)) < 1e-12


def test_stadium_mesh_valid_and_accurate():
    d = build_domain("stadium", l=1.0, r=0.5)
    m = generate_mesh(d, 0.1)
    validate_mesh(m)
    assert abs(m.area() - d.measure) < 2e-3
    assert abs(m.boundary_length() - d.perimeter) < 4e-3


def test_polygon_fan_and_nonconvex_error():
    tri = build_domain("polygon", vertices=[(0, 0), (2, 0), (1, 1.5)])
    m = generate_mesh(tri, 0.3)
    assert abs(m.area() - tri.measure) < 1e-12
    notch = build_domain("polygon", vertices=[(0, 0), (2, 0), (2, 2), (1, 0.5), (0, 2)])
    with pytest.raises(UnsupportedDomainError):
        generate_mesh(notch, 0.3)


def test_refine_counts_and_composition():
    m = generate_mesh(build_domain("rect", w=1.0, h=1.0), 0.25)
    r1 = refine_mesh(m)
    assert len(r1.triangles) == 128
    r2a = refine_mesh(r1)
    assert len(r2a.triangles) == 4 * len(r1.triangles)
    assert r2a.num_nodes == len(np.unique(r2a.triangles))


def test_refine_disc_area_error_ratio():
    d = build_domain("disc", r=1.0)
    m = generate_mesh(d, 0.2)
    errs = []
    for _ in range(3):
        errs.append(abs(m.area() - math.pi))
        m = refine_mesh(m)
    errs.append(abs(m.area() - math.pi))
    for a, b in zip(errs, errs[1:]):
        assert a / b >= 3.5


def test_refine_projects_boundary_midpoints():
    d = build_domain("disc", r=1.0)
    m = refine_mesh(generate_mesh(d, 0.2))
    bn = m.boundary_nodes()
    radii = np.hypot(m.nodes[bn, 0], m.nodes[bn, 1])
    assert np.max(np.abs(radii - 1.0)) < 1e-12


def test_mesh_text_roundtrip_bit_exact():
    m = generate_mesh(build_domain("ellipse", a=1.3, b=0.9), 0.2)
    text = export_mesh_text(m)
    m2 = import_mesh_text(text)
    assert export_mesh_text(m2) == text
    assert abs(m2.area() - m.area()) < 1e-15


def test_import_rejects_bad_header():
    with pytest.raises(MeshError):
        import_mesh_text("nodes 3 cells 1 bedges 3\n")


def test_h_guard():
    d = build_domain("disc", r=1.0)
    with pytest.raises(MeshError):
        generate_mesh(d, 0.9)


def test_every_family_validates():
    for spec in ("disc r=1", "ellipse a=1.5 b=0.667", "rect w=2 h=0.5",
                 "stadium l=1 r=0.5", "polygon 0,0 1,0 1.2,0.8 0.5,1.3 -0.2,0.7"):
        m = generate_mesh(parse_domain_spec(spec), 0.15)
        validate_mesh(m)
        areas = m.triangle_areas()
        assert areas.min() > 0
