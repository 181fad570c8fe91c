use darap::darap::{deform, TargetNormals};
use darap::grad::deform_and_vjp;
use darap::mesh::Mesh;
use darap::metrics::{area_ratio_stats, axis_deviation, AreaRatioStats};
use darap::ops::{build_operators, Pin, SurfaceOperators};
use darap::style::{cubify_targets, Adam, NormalMatch, OptimizeConfig};
use darap::{shapes, Error, Result};

pub fn make_shape(name: &str, detail: u32) -> Result<Mesh> {
    let detail = detail.clamp(1, 5);
    match name {
        "icosphere" => Ok(shapes::icosphere(detail)),
        "organic" => Ok(shapes::organic(detail, 7)),
        "torus" => {
            let n = 12 * detail as usize;
            Ok(shapes::torus(2 * n, n, 1.0, 0.4))
        }
        other => Err(Error::InvalidInput(format!("unknown shape {other:?}"))),
    }
}

/// Source mesh, its operators and the optimizer state behind the page.
pub struct Session {
    operators: SurfaceOperators,
    current: Mesh,
    cubify: NormalMatch,
    targets: TargetNormals,
    adam: Adam,
    config: OptimizeConfig,
    last_loss: f64,
}

impl Session {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let operators = build_operators(&mesh, Pin::First)?;
        let normals = operators.source_normals().to_vec();
        let cubify = NormalMatch::new(
            "cubify",
            cubify_targets(&normals).into_inner(),
            operators.vertex_masses().to_vec(),
        )?;
        let config = OptimizeConfig {
            learning_rate: 0.01,
            restore_bbox: true,
            ..Default::default()
        };
        let last_loss = cubify.loss_and_grad(&mesh)?.0;
        Ok(Self {
            adam: Adam::new(mesh.n_vertices(), config.learning_rate),
            targets: TargetNormals::new(normals),
            current: mesh,
            operators,
            cubify,
            config,
            last_loss,
        })
    }

    pub fn source(&self) -> &Mesh {
        self.operators.source()
    }

    pub fn current(&self) -> &Mesh {
        &self.current
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    pub fn steps(&self) -> i32 {
        self.adam.steps()
    }

    pub fn last_loss(&self) -> f64 {
        self.last_loss
    }

    /// Back to the source shape with source normals as targets.
    pub fn reset(&mut self) {
        self.current = self.source().clone();
        self.targets = TargetNormals::new(self.operators.source_normals().to_vec());
        self.adam = Adam::new(self.current.n_vertices(), self.config.learning_rate);
        self.last_loss = self.cubify.loss_and_grad(&self.current).map_or(f64::NAN, |r| r.0);
    }

    /// Single deformation with axis-snapped targets.
    pub fn deform_cubify(&mut self, lambda: f64) -> Result<()> {
        self.config.lambda = lambda;
        let targets = TargetNormals::new(self.cubify.targets().to_vec());
        let (mesh, _) = deform(&self.operators, &targets, &self.config.deform_config())?;
        self.last_loss = self.cubify.loss_and_grad(&mesh)?.0;
        self.current = mesh;
        Ok(())
    }

    /// Re-applies the optimized targets at another strength.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        self.config.lambda = lambda;
        let (mesh, _) = deform(&self.operators, &self.targets, &self.config.deform_config())?;
        self.last_loss = self.cubify.loss_and_grad(&mesh)?.0;
        self.current = mesh;
        Ok(())
    }

    /// Adam updates of the target normals against the cubify loss.
    pub fn optimize(&mut self, steps: u32) -> Result<f64> {
        let config = self.config.deform_config();
        for _ in 0..steps {
            let mut loss = 0.0;
            let mut failure = None;
            let (fwd, grad) = deform_and_vjp(&self.operators, &self.targets, &config, |fwd| {
                match self.cubify.loss_and_grad(&fwd.mesh) {
                    Ok((l, g)) => {
                        loss = l;
                        g
                    }
                    Err(e) => {
                        failure = Some(e);
                        vec![Default::default(); fwd.mesh.n_vertices()]
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            self.adam.step(self.targets.values_mut(), &grad);
            self.current = fwd.mesh;
            self.last_loss = loss;
        }
        let (mesh, _) = deform(&self.operators, &self.targets, &config)?;
        self.last_loss = self.cubify.loss_and_grad(&mesh)?.0;
        self.current = mesh;
        Ok(self.last_loss)
    }

    pub fn area_ratios(&self, bins: usize) -> Result<AreaRatioStats> {
        area_ratio_stats(self.source(), &self.current, bins)
    }

    pub fn axis_deviation(&self) -> f64 {
        axis_deviation(&self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_build() {
        for name in ["icosphere", "organic", "torus"] {
            let s = Session::new(make_shape(name, 2).unwrap()).unwrap();
            assert!(s.current().n_faces() > 0);
        }
        assert!(make_shape("teapot", 2).is_err());
    }

    #[test]
    fn cubify_lowers_axis_deviation() {
        let mut s = Session::new(make_shape("icosphere", 2).unwrap()).unwrap();
        let before = s.axis_deviation();
        s.deform_cubify(8.0).unwrap();
        assert!(s.axis_deviation() < before);
        s.reset();
        assert_eq!(s.current(), s.source());
    }

    #[test]
    fn optimize_descends() {
        let mut s = Session::new(make_shape("icosphere", 2).unwrap()).unwrap();
        let start = s.last_loss();
        let end = s.optimize(15).unwrap();
        assert!(end < start, "{end} vs {start}");
        assert_eq!(s.steps(), 15);
        s.set_lambda(0.0).unwrap();
        let d = s
            .current()
            .vertices()
            .iter()
            .zip(s.source().vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-6);
    }

    #[test]
    fn histogram_of_source_is_one_bin() {
        let s = Session::new(make_shape("torus", 1).unwrap()).unwrap();
        let stats = s.area_ratios(30).unwrap();
        assert_eq!(stats.mean, 1.0);
        let full: Vec<_> = stats.histogram.iter().filter(|b| b.count > 0).collect();
        assert_eq!(full.len(), 1);
    }
}
