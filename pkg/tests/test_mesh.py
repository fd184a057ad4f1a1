import numpy as np
import pytest

from oifem.mesh import InterfaceMesh, MeshError, generate_slab, read_mesh, write_mesh


def test_slab_unit():
    m = generate_slab(1, 1, 1, 1, 1)
    assert m.n_triangles == 8
    assert len(m.interface_edges) == 1
    np.testing.assert_allclose(m.interface_normals(), [[1.0, 0.0]])


@pytest.mark.parametrize("nx,ny", [(1, 1), (4, 2), (3, 5)])
def test_slab_counts(nx, ny):
    m = generate_slab(nx, ny, 1.0, 2.0, 0.5)
    assert m.n_triangles == 8 * nx * ny
    assert len(m.interface_edges) == ny
    assert m.signed_areas().sum() == pytest.approx(3.0 * 0.5, rel=1e-12)
    # Euler characteristic of a triangulated disc
    V, E, F = m.n_vertices, len(m.edges()), m.n_triangles
    assert V == (2 * nx + 1) * (ny + 1) + 2 * nx * ny
    assert V - E + F == 1
    n = m.interface_normals()
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-14)
    assert np.all(n @ [1.0, 0.0] >= 0.5)


def test_slab_rejects_bad_input():
    with pytest.raises(ValueError):
        generate_slab(0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        generate_slab(1, 1, -1, 1, 1)


def test_roundtrip(tmp_path):
    m = generate_slab(1, 1, 1, 1, 1)
    write_mesh(m, tmp_path / "m.oimesh")
    assert read_mesh(tmp_path / "m.oimesh").structurally_equal(m)
    m = generate_slab(3, 2, 0.7, 1.3, 0.9)
    write_mesh(m, tmp_path / "m2.oimesh")
    assert read_mesh(tmp_path / "m2.oimesh").structurally_equal(m)


def _lines(tmp_path):
    write_mesh(generate_slab(1, 1, 1, 1, 1), tmp_path / "m.oimesh")
    return (tmp_path / "m.oimesh").read_text().splitlines()


def _write(tmp_path, lines):
    path = tmp_path / "bad.oimesh"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_interface_orientation_error(tmp_path):
    lines = _lines(tmp_path)
    k = lines.index("iedges 1") + 1
    i, j, t1, t2 = lines[k].split()
    lines[k] = f"{i} {j} {t2} {t1}"
    with pytest.raises(MeshError, match="interface orientation") as err:
        read_mesh(_write(tmp_path, lines))
    assert err.value.line == k + 1


def test_interface_between_two_region1_triangles(tmp_path):
    lines = _lines(tmp_path)
    k = lines.index("iedges 1") + 1
    tri2 = int(lines[k].split()[3])
    row = lines.index("triangles 8") + 1 + tri2
    parts = lines[row].split()
    lines[row] = " ".join(parts[:3] + ["1"])
    with pytest.raises(MeshError, match="interface orientation"):
        read_mesh(_write(tmp_path, lines))


def test_missing_dirichlet_component(tmp_path):
    lines = _lines(tmp_path)
    lines = [ln.replace(" dirB", " neu") for ln in lines]
    with pytest.raises(MeshError, match="missing Dirichlet component"):
        read_mesh(_write(tmp_path, lines))


def test_unknown_marker(tmp_path):
    lines = _lines(tmp_path)
    lines = [ln.replace(" neu", " robin", 1) if ln.endswith(" neu") else ln for ln in lines]
    with pytest.raises(MeshError, match="unknown marker"):
        read_mesh(_write(tmp_path, lines))


def test_malformed(tmp_path):
    lines = _lines(tmp_path)
    with pytest.raises(MeshError, match="header"):
        read_mesh(_write(tmp_path, ["mesh 2"] + lines[1:]))
    with pytest.raises(MeshError, match="line 3"):
        read_mesh(_write(tmp_path, lines[:2] + ["0.0"] + lines[3:]))
    with pytest.raises(MeshError, match="end of file"):
        read_mesh(_write(tmp_path, lines[:-1]))


def test_negative_area(tmp_path):
    lines = _lines(tmp_path)
    k = lines.index("triangles 8") + 1
    i, j, kk, r = lines[k].split()
    lines[k] = f"{j} {i} {kk} {r}"
    with pytest.raises(MeshError, match="non-positive signed area") as err:
        read_mesh(_write(tmp_path, lines))
    assert err.value.line == k + 1


def test_disconnected_interface():
    m = generate_slab(1, 2, 1, 1, 1)
    # drop one interface edge: the regions are then separated by an unlisted edge
    bad = InterfaceMesh(m.vertices, m.triangles, m.regions, m.boundary_edges,
                        m.boundary_markers, m.interface_edges[:1], m.interface_tris[:1])
    from oifem.mesh import validate_mesh
    with pytest.raises(MeshError, match="not an interface edge"):
        validate_mesh(bad)
