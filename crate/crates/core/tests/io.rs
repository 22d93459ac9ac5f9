use approx::assert_relative_eq;
use nalgebra::DVector;
use pullvexlab::geomcore::MapSample;
use pullvexlab::harmonic::generators::{catenoid_band, catenoid_map, flat_disk, round_sphere};
use pullvexlab::harmonic::io::{read_mesh, read_values_csv, write_mesh, write_values_csv_file, MeshIoError};
use pullvexlab::harmonic::{DiscreteMap, MetricSource};
use tempfile::TempDir;

#[test]
fn meshes_survive_a_trip_through_disk_in_both_formats() {
    let dir = TempDir::new().unwrap();
    for mesh in [flat_disk(5, 2.0).unwrap(), round_sphere(1.0, 2).unwrap()] {
        for name in ["m.off", "m.obj"] {
            let path = dir.path().join(name);
            write_mesh(&path, &mesh).unwrap();
            let back = read_mesh(&path).unwrap();
            assert_eq!(back.faces(), mesh.faces());
            assert_eq!(back.boundary_flags(), mesh.boundary_flags());
            for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
                assert_relative_eq!(a, b, epsilon = 1e-15);
            }
        }
    }
}

#[test]
fn vertex_values_round_trip_through_csv_files() {
    let dir = TempDir::new().unwrap();
    let u = DiscreteMap::from_map(catenoid_band(1.0, 1).unwrap(), &catenoid_map(), MetricSource::Embedding).unwrap();
    let path = dir.path().join("values.csv");
    write_values_csv_file(&path, u.values()).unwrap();
    let back = read_values_csv(&path, u.values().len()).unwrap();
    for (a, b) in back.iter().zip(u.values()) {
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }
    assert!(matches!(read_values_csv(&path, u.values().len() + 1), Err(MeshIoError::Parse { .. })));
}

#[test]
fn missing_files_name_the_path() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("absent.off");
    let err = read_mesh(&path).unwrap_err();
    assert!(matches!(err, MeshIoError::Io { .. }));
    assert!(err.to_string().contains("absent.off"));
}

#[test]
fn planar_obj_keeps_two_coordinates() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("disk.obj");
    let mesh = flat_disk(3, 1.0).unwrap();
    write_mesh(&path, &mesh).unwrap();
    let back = read_mesh(&path).unwrap();
    assert_eq!(back.dim(), 2);
    let u = DiscreteMap::from_map(back, &MapSample::identity(2), MetricSource::flat(2)).unwrap();
    assert_relative_eq!(u.values()[0], DVector::zeros(2), epsilon = 1e-15);
}
