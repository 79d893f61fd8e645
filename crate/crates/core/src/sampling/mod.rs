//! Converting triangle-mesh scenes into point clouds.
//!
//! Two procedures, selectable per layer:
//!
//! * surface sampling — points drawn on the mesh surface with probability
//!   proportional to triangle area, placed uniformly inside each triangle;
//! * support points — one point per object, the center of the bottom
//!   (y = min) face of the object's axis-aligned bounding box, i.e. where
//!   the object rests.
//!
//! Objects carry string layer tags (see [`obj`] for the `name@layer` file
//! convention). Output clouds tag every point with an integer layer id;
//! ids number the mesh's distinct layer names in lexicographic order.

mod obj;

pub use obj::load_mesh;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, PointCloud};

/// One named, layer-tagged piece of a scene.
#[derive(Clone, Debug)]
pub struct MeshObject {
    name: String,
    layer: String,
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
}

impl MeshObject {
    /// Validates triangle indices; triangles may be empty (a bare point set
    /// still has a bounding box and therefore a support point).
    pub fn new(
        name: impl Into<String>,
        layer: impl Into<String>,
        vertices: Vec<Point3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let name = name.into();
        for tri in &triangles {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(Error::TriangleIndexOutOfRange {
                        object: name,
                        index: i,
                        vertices: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[0] == tri[2] || tri[1] == tri[2] {
                return Err(Error::RepeatedTriangleIndex(name));
            }
        }
        Ok(MeshObject {
            name,
            layer: layer.into(),
            vertices,
            triangles,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }
}

/// An ordered collection of mesh objects with unique names.
#[derive(Clone, Debug)]
pub struct SceneMesh {
    objects: Vec<MeshObject>,
}

impl SceneMesh {
    pub fn new(objects: Vec<MeshObject>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut seen = BTreeSet::new();
        for o in &objects {
            if !seen.insert(o.name.as_str()) {
                return Err(Error::DuplicateObjectName(o.name.clone()));
            }
        }
        Ok(SceneMesh { objects })
    }

    pub fn objects(&self) -> &[MeshObject] {
        &self.objects
    }

    /// Distinct layer names present in the mesh.
    pub fn layer_names(&self) -> BTreeSet<String> {
        self.objects.iter().map(|o| o.layer.clone()).collect()
    }

    /// Integer ids for the mesh's layers: lexicographic rank of the layer
    /// name among all distinct names. These ids tag sampled points.
    pub fn layer_ids(&self) -> BTreeMap<String, i32> {
        self.layer_names()
            .into_iter()
            .enumerate()
            .map(|(i, name)| (name, i as i32))
            .collect()
    }
}

/// Selects objects by layer tag. An object passes iff its layer is in the
/// include set (or no include set is given) and not in the exclude set;
/// exclusion wins on conflict.
#[derive(Clone, Debug, Default)]
pub struct LayerFilter {
    include: Option<BTreeSet<String>>,
    exclude: BTreeSet<String>,
}

impl LayerFilter {
    /// Passes every layer.
    pub fn all() -> Self {
        Self::default()
    }

    pub fn include<I: IntoIterator<Item = S>, S: Into<String>>(mut self, layers: I) -> Self {
        self.include = Some(layers.into_iter().map(Into::into).collect());
        self
    }

    pub fn exclude<I: IntoIterator<Item = S>, S: Into<String>>(mut self, layers: I) -> Self {
        self.exclude = layers.into_iter().map(Into::into).collect();
        self
    }

    pub fn passes(&self, layer: &str) -> bool {
        let included = match &self.include {
            Some(set) => set.contains(layer),
            None => true,
        };
        included && !self.exclude.contains(layer)
    }
}

/// Per-layer sampling assignment used by [`sample_scene`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMethod {
    Surface,
    Support,
    Ignore,
}

fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    (b - a).cross(c - a).norm() * 0.5
}

/// Draws `n` points on the surface of the passing objects, i.i.d. with
/// probability proportional to triangle area, each placed by square-root
/// barycentric sampling (uniform within its triangle). Points are tagged
/// with their source object's layer id. Deterministic for a fixed seed.
pub fn surface_sample(
    mesh: &SceneMesh,
    n: usize,
    seed: u64,
    filter: &LayerFilter,
) -> Result<PointCloud> {
    let layer_ids = mesh.layer_ids();

    struct Tri {
        corners: [Point3; 3],
        cumulative_area: f64,
        layer_id: i32,
    }

    let mut triangles: Vec<Tri> = Vec::new();
    let mut total = 0.0;
    let mut any_object = false;
    for object in mesh.objects() {
        if !filter.passes(&object.layer) {
            continue;
        }
        any_object = true;
        let layer_id = layer_ids[&object.layer];
        for tri in &object.triangles {
            let corners = [
                object.vertices[tri[0]],
                object.vertices[tri[1]],
                object.vertices[tri[2]],
            ];
            total += triangle_area(corners[0], corners[1], corners[2]);
            triangles.push(Tri {
                corners,
                cumulative_area: total,
                layer_id,
            });
        }
    }

    if n == 0 {
        return PointCloud::with_layers(Vec::new(), Vec::new());
    }
    if !any_object {
        return Err(Error::NoPassingObjects);
    }
    if total <= 0.0 {
        return Err(Error::ZeroSurfaceArea);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        // Three draws per point: triangle selector, then two barycentric
        // coordinates. Zero-area triangles have zero-width cumulative slots
        // and are never selected.
        let u = rng.random::<f64>() * total;
        let k = triangles.partition_point(|t| t.cumulative_area <= u);
        let tri = &triangles[k.min(triangles.len() - 1)];
        let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
        let su = r1.sqrt();
        let [a, b, c] = tri.corners;
        let p = a * (1.0 - su) + b * (su * (1.0 - r2)) + c * (su * r2);
        points.push(p);
        layers.push(tri.layer_id);
    }
    PointCloud::with_layers(points, layers)
}

/// One point per passing object: the center of the lowest XZ face of the
/// object's bounding box, `((xmin+xmax)/2, ymin, (zmin+zmax)/2)`. Output
/// follows object order.
pub fn support_points(mesh: &SceneMesh, filter: &LayerFilter) -> Result<PointCloud> {
    let layer_ids = mesh.layer_ids();
    let mut points = Vec::new();
    let mut layers = Vec::new();
    for object in mesh.objects() {
        if !filter.passes(&object.layer) {
            continue;
        }
        let bb = object
            .aabb()
            .ok_or_else(|| Error::EmptyObject(object.name.clone()))?;
        points.push(Point3::new(
            (bb.min.x + bb.max.x) * 0.5,
            bb.min.y,
            (bb.min.z + bb.max.z) * 0.5,
        ));
        layers.push(layer_ids[&object.layer]);
    }
    if points.is_empty() {
        return Err(Error::NoPassingObjects);
    }
    PointCloud::with_layers(points, layers)
}

/// Samples a scene with a per-layer method assignment; layers not present
/// in `assignments` default to [`SamplingMethod::Surface`]. The result is
/// the surface block (`n_surface` points, area-weighted across all
/// surface-assigned layers) followed by the support block.
pub fn sample_scene(
    mesh: &SceneMesh,
    assignments: &BTreeMap<String, SamplingMethod>,
    n_surface: usize,
    seed: u64,
) -> Result<PointCloud> {
    let mut surface_layers = Vec::new();
    let mut support_layers = Vec::new();
    for layer in mesh.layer_names() {
        match assignments.get(&layer).copied().unwrap_or(SamplingMethod::Surface) {
            SamplingMethod::Surface => surface_layers.push(layer),
            SamplingMethod::Support => support_layers.push(layer),
            SamplingMethod::Ignore => {}
        }
    }
    if surface_layers.is_empty() && support_layers.is_empty() {
        return Err(Error::AllLayersIgnored);
    }

    let mut points = Vec::new();
    let mut layers = Vec::new();
    if !surface_layers.is_empty() {
        let cloud = surface_sample(mesh, n_surface, seed, &LayerFilter::all().include(surface_layers))?;
        layers.extend_from_slice(cloud.layers().unwrap());
        points.extend_from_slice(cloud.points());
    }
    if !support_layers.is_empty() {
        let cloud = support_points(mesh, &LayerFilter::all().include(support_layers))?;
        layers.extend_from_slice(cloud.layers().unwrap());
        points.extend_from_slice(cloud.points());
    }
    PointCloud::with_layers(points, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_right_triangle() -> SceneMesh {
        let obj = MeshObject::new(
            "tri",
            "default",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        SceneMesh::new(vec![obj]).unwrap()
    }

    fn unit_cube(name: &str, layer: &str, origin: Point3) -> MeshObject {
        let mut vertices = Vec::new();
        for &x in &[0.0, 1.0] {
            for &y in &[0.0, 1.0] {
                for &z in &[0.0, 1.0] {
                    vertices.push(origin + Point3::new(x, y, z));
                }
            }
        }
        // Two faces are enough to span the AABB; support points only need
        // the vertex extent.
        MeshObject::new(name, layer, vertices, vec![[0, 1, 2], [4, 5, 6]]).unwrap()
    }

    #[test]
    fn mesh_object_rejects_bad_indices() {
        assert!(MeshObject::new("o", "l", vec![Point3::ORIGIN], vec![[0, 0, 1]]).is_err());
        assert!(MeshObject::new(
            "o",
            "l",
            vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 1]]
        )
        .is_err());
    }

    #[test]
    fn scene_mesh_rejects_duplicates_and_empty() {
        assert!(matches!(SceneMesh::new(vec![]), Err(Error::EmptyMesh)));
        let a = unit_cube("same", "default", Point3::ORIGIN);
        let b = unit_cube("same", "default", Point3::new(5.0, 0.0, 0.0));
        assert!(matches!(
            SceneMesh::new(vec![a, b]),
            Err(Error::DuplicateObjectName(_))
        ));
    }

    #[test]
    fn layer_ids_are_lexicographic() {
        let a = unit_cube("a", "walls", Point3::ORIGIN);
        let b = unit_cube("b", "floor", Point3::new(5.0, 0.0, 0.0));
        let mesh = SceneMesh::new(vec![a, b]).unwrap();
        let ids = mesh.layer_ids();
        assert_eq!(ids["floor"], 0);
        assert_eq!(ids["walls"], 1);
    }

    #[test]
    fn filter_semantics() {
        let f = LayerFilter::all();
        assert!(f.passes("anything"));
        let f = LayerFilter::all().include(["a", "b"]);
        assert!(f.passes("a") && !f.passes("c"));
        // Exclude wins over include.
        let f = LayerFilter::all().include(["a"]).exclude(["a"]);
        assert!(!f.passes("a"));
    }

    #[test]
    fn surface_points_stay_on_triangle() {
        let mesh = unit_right_triangle();
        let cloud = surface_sample(&mesh, 10, 99, &LayerFilter::all()).unwrap();
        assert_eq!(cloud.len(), 10);
        for p in cloud.points() {
            assert!(p.z.abs() < 1e-12, "off the triangle plane: {p:?}");
            // Barycentric coordinates of the right triangle are (x, y).
            assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 + 1e-12);
        }
        assert_eq!(cloud.layers().unwrap(), &[0; 10]);
    }

    #[test]
    fn surface_counts_follow_area() {
        // Two disjoint triangles with areas 1 and 3.
        let t1 = MeshObject::new(
            "small",
            "a",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let t2 = MeshObject::new(
            "large",
            "b",
            vec![
                Point3::new(10.0, 0.0, 0.0),
                Point3::new(16.0, 0.0, 0.0),
                Point3::new(10.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mesh = SceneMesh::new(vec![t1, t2]).unwrap();
        let n = 100_000;
        let cloud = surface_sample(&mesh, n, 7, &LayerFilter::all()).unwrap();
        let small = cloud.points().iter().filter(|p| p.x < 5.0).count();
        let expected = n as f64 * 0.25;
        // Binomial sd here is ~137 points; a 1% absolute band is over 7
        // sigma, and the seed is fixed anyway.
        assert!(
            (small as f64 - expected).abs() < n as f64 * 0.01,
            "small triangle got {small} of {n}"
        );
    }

    #[test]
    fn surface_sample_deterministic() {
        let mesh = unit_right_triangle();
        let a = surface_sample(&mesh, 100, 5, &LayerFilter::all()).unwrap();
        let b = surface_sample(&mesh, 100, 5, &LayerFilter::all()).unwrap();
        assert_eq!(a, b);
        let c = surface_sample(&mesh, 100, 6, &LayerFilter::all()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn surface_sample_empty_filter_errors() {
        let obj = unit_cube("only", "ignore_me", Point3::ORIGIN);
        let mesh = SceneMesh::new(vec![obj]).unwrap();
        let filter = LayerFilter::all().exclude(["ignore_me"]);
        assert!(matches!(
            surface_sample(&mesh, 5, 0, &filter),
            Err(Error::NoPassingObjects)
        ));
        // n = 0 succeeds with an empty (but layer-tagged) cloud.
        let empty = surface_sample(&mesh, 0, 0, &filter).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn surface_sample_zero_area_errors() {
        let obj = MeshObject::new(
            "degenerate",
            "default",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mesh = SceneMesh::new(vec![obj]).unwrap();
        assert!(matches!(
            surface_sample(&mesh, 5, 0, &LayerFilter::all()),
            Err(Error::ZeroSurfaceArea)
        ));
    }

    #[test]
    fn support_point_of_unit_cube() {
        let mesh = SceneMesh::new(vec![unit_cube("cube", "default", Point3::ORIGIN)]).unwrap();
        let cloud = support_points(&mesh, &LayerFilter::all()).unwrap();
        assert_eq!(cloud.points(), &[Point3::new(0.5, 0.0, 0.5)]);
    }

    #[test]
    fn support_points_per_object() {
        let a = unit_cube("a", "default", Point3::ORIGIN);
        let b = unit_cube("b", "default", Point3::new(2.0, 1.0, 0.0));
        let mesh = SceneMesh::new(vec![a, b]).unwrap();
        let cloud = support_points(&mesh, &LayerFilter::all()).unwrap();
        assert_eq!(
            cloud.points(),
            &[Point3::new(0.5, 0.0, 0.5), Point3::new(2.5, 1.0, 0.5)]
        );
    }

    #[test]
    fn support_point_degenerate_object() {
        let p = Point3::new(3.0, -1.0, 2.0);
        let obj = MeshObject::new("dot", "default", vec![p], vec![]).unwrap();
        let mesh = SceneMesh::new(vec![obj]).unwrap();
        let cloud = support_points(&mesh, &LayerFilter::all()).unwrap();
        assert_eq!(cloud.points(), &[p]);
    }

    #[test]
    fn sample_scene_all_surface_reduces_to_surface_sample() {
        let mesh = unit_right_triangle();
        let direct = surface_sample(&mesh, 50, 3, &LayerFilter::all()).unwrap();
        let via_scene = sample_scene(&mesh, &BTreeMap::new(), 50, 3).unwrap();
        assert_eq!(direct, via_scene);
    }

    #[test]
    fn sample_scene_all_ignored_errors() {
        let mesh = unit_right_triangle();
        let mut assignments = BTreeMap::new();
        assignments.insert("default".to_string(), SamplingMethod::Ignore);
        assert!(matches!(
            sample_scene(&mesh, &assignments, 50, 3),
            Err(Error::AllLayersIgnored)
        ));
    }

    #[test]
    fn sample_scene_mixed_blocks() {
        let tri = MeshObject::new(
            "tri",
            "deco",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let cube = unit_cube("cube", "furniture", Point3::new(10.0, 0.0, 0.0));
        let mesh = SceneMesh::new(vec![tri, cube]).unwrap();
        let mut assignments = BTreeMap::new();
        assignments.insert("deco".to_string(), SamplingMethod::Surface);
        assignments.insert("furniture".to_string(), SamplingMethod::Support);
        let cloud = sample_scene(&mesh, &assignments, 5, 1).unwrap();
        assert_eq!(cloud.len(), 6);
        assert_eq!(cloud.points()[5], Point3::new(10.5, 0.0, 0.5));
        // Surface block first, support block last.
        let ids = mesh.layer_ids();
        let layers = cloud.layers().unwrap();
        assert!(layers[..5].iter().all(|&l| l == ids["deco"]));
        assert_eq!(layers[5], ids["furniture"]);
    }

    #[test]
    fn filter_monotonic_under_shrinking_include() {
        let a = unit_cube("a", "la", Point3::ORIGIN);
        let b = unit_cube("b", "lb", Point3::new(3.0, 0.0, 0.0));
        let mesh = SceneMesh::new(vec![a, b]).unwrap();
        let both = support_points(&mesh, &LayerFilter::all().include(["la", "lb"])).unwrap();
        let one = support_points(&mesh, &LayerFilter::all().include(["la"])).unwrap();
        assert!(one.len() <= both.len());
        for p in one.points() {
            assert!(both.points().contains(p));
        }
    }
}
