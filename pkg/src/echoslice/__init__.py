"""echoslice: decode 3D echocardiography volumes, slice arbitrary planes
with preserved spatial calibration, and auto-select the eight standard
views via landmark-derived search ranges and a pluggable view scorer."""

from .codec import (ChecksumPolicy, RawStream, TagConfig, decode_volume,
                    encode_volume, parse_dicom_private_payload,
                    parse_stream_header, read_e3dc, write_e3dc)
from .errors import (AdapterError, CodecError, EchoSliceError, GeometryError,
                     LandmarkError, PlaneOutsideVolumeError, SearchError)
from .geometry import (PlaneAD, PlaneBasis, PlanePN, cartesian_to_spherical,
                       grid_coordinate, plane_ad_to_pn, plane_basis,
                       plane_pn_to_ad, plane_point, spherical_to_cartesian)
from .landmarks import (LandmarkProviderResult, LandmarkSet, a4c_plane,
                        landmark_set_from_apex, locate_landmarks)
from .phantom import (Ellipsoid, PhantomSpec, PhantomTruth, generate_phantom,
                      phantom_landmark_provider, phantom_scorer,
                      standard_phantom)
from .resampler import (SamplingGrid, SliceExtent, SliceImage,
                        ViewRenderConfig, interpolate, make_sampling_grid,
                        pixel_to_world, render_slice, render_sequence,
                        slice_extent)
from .search import (VIEWS, ExtractConfig, ExtractionResult, ParamRange,
                     SelectedView, StepConfig, build_search_ranges,
                     edv_disk_summation, end_diastole_frame,
                     enumerate_candidates, extract_standard_views,
                     select_view)
from .volume import BoundsMatrix, VolumeMeta, VolumeSequence

__version__ = "0.1.0"
