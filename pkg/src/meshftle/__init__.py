"""FTLE fields on unstructured simplex meshes with a static multi-device
partitioning model."""
from .errors import *  # noqa: F401,F403
from .flows import FlowSpec, abc, affine, double_gyre, identity, integrate_flowmap, velocity
from .kernel import (
    FtleField,
    compute_ftle,
    compute_ftle_range,
    ftle_point,
    grad_tensor_2d,
    grad_tensor_3d,
    green_gauss_neighbors,
    max_eigenvalue_2d,
    max_eigenvalue_3d,
)
from .mesh import (
    Flowmap,
    Mesh,
    generate_grid_2d,
    generate_grid_3d,
    grid_counts,
    read_flowmap,
    read_mesh,
    write_flowmap,
    write_mesh,
)
from .preprocess import (
    FaceIndex,
    build_face_index,
    build_faces_per_point,
    count_faces_per_point,
    incident_faces,
)
from .scheduler import (
    DeviceProfile,
    Partition,
    Submission,
    detect_dependencies,
    partition_range,
    run_parallel,
    simulate_schedule,
)

__version__ = "0.1.0"
