//! Kinematic tabletop world: objects, gripper, and the action transitions.
//!
//! There is no physics. Stacking is a pure z-offset rule, a cup holds its
//! content at the cup rim, and every action either fully applies or leaves the
//! world untouched.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const BLOCK_HEIGHT: f64 = 0.04;
pub const CUP_HEIGHT: f64 = 0.10;

const BLOCK_HALF_WIDTH: f64 = 0.02;
const CUP_HALF_WIDTH: f64 = 0.04;
const FOOTPRINT_EPS: f64 = 1e-9;

const GRID_X: [f64; 5] = [0.10, 0.20, 0.30, 0.40, 0.50];
const GRID_Y: [f64; 5] = [-0.20, -0.10, 0.0, 0.10, 0.20];

/// A point or displacement in meters, serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;

    fn add(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;

    fn sub(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Cylinder,
    Triangle,
    Cup,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Cylinder => "cylinder",
            Shape::Triangle => "triangle",
            Shape::Cup => "cup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Orange,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Purple,
        Color::Orange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Orange => "orange",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observability {
    Observable,
    Partial,
}

/// Scenario family a world is spawned from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioConfig {
    /// Four movable blocks and two cups, everything visible.
    Observable,
    /// Three movable blocks of distinct hidden mass, one fixed block, two cups.
    Partial,
}

impl ScenarioConfig {
    pub fn observability(self) -> Observability {
        match self {
            ScenarioConfig::Observable => Observability::Observable,
            ScenarioConfig::Partial => Observability::Partial,
        }
    }
}

impl std::str::FromStr for ScenarioConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "observable" => Ok(ScenarioConfig::Observable),
            "partial" => Ok(ScenarioConfig::Partial),
            other => Err(format!("unknown scenario '{other}' (expected observable or partial)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub name: String,
    pub shape: Shape,
    pub color: Color,
    pub height: f64,
    pub mass: f64,
    pub position: Vec3,
    pub fixed: bool,
    pub mass_visible: bool,
}

impl ObjectState {
    pub fn is_cup(&self) -> bool {
        self.shape == Shape::Cup
    }

    fn half_width(&self) -> f64 {
        if self.is_cup() {
            CUP_HALF_WIDTH
        } else {
            BLOCK_HALF_WIDTH
        }
    }

    fn top(&self) -> f64 {
        self.position.z + self.height / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub position: Vec3,
    pub holding: Option<String>,
}

/// Axis-aligned workspace box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub const WORKSPACE: Bounds = Bounds {
        min: Vec3::new(0.0, -0.3, 0.0),
        max: Vec3::new(0.6, 0.3, 0.4),
    };

    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub query: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub objects: BTreeMap<String, ObjectState>,
    pub gripper: GripperState,
    pub bounds: Bounds,
    pub observability: Observability,
    pub sensor_log: Vec<SensorReading>,
}

/// Target configuration a task is scored against.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalState {
    pub object_targets: BTreeMap<String, Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gripper_target: Option<Vec3>,
    #[serde(default)]
    pub require_empty_hand: bool,
}

impl GoalState {
    /// Goal that is satisfied exactly by `world`'s current configuration.
    pub fn from_world(world: &WorldState, track_gripper: bool) -> Self {
        GoalState {
            object_targets: world
                .objects
                .iter()
                .map(|(name, obj)| (name.clone(), obj.position))
                .collect(),
            gripper_target: track_gripper.then_some(world.gripper.position),
            require_empty_hand: world.gripper.holding.is_none(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionErrorKind {
    UnknownObject,
    AlreadyHolding,
    HandEmpty,
    ObjectFixed,
    UnstableGrasp,
    OutOfBounds,
    OccupiedTarget,
}

impl ActionErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionErrorKind::UnknownObject => "unknown_object",
            ActionErrorKind::AlreadyHolding => "already_holding",
            ActionErrorKind::HandEmpty => "hand_empty",
            ActionErrorKind::ObjectFixed => "object_fixed",
            ActionErrorKind::UnstableGrasp => "unstable_grasp",
            ActionErrorKind::OutOfBounds => "out_of_bounds",
            ActionErrorKind::OccupiedTarget => "occupied_target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}: {message}", kind.as_str())]
pub struct ActionError {
    pub kind: ActionErrorKind,
    pub message: String,
}

impl ActionError {
    fn new(kind: ActionErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

pub type ActionResult<T> = Result<T, ActionError>;

/// Spawns a world for `scenario`. Positions and attributes depend only on
/// `(scenario, seed)`.
pub fn spawn_world(scenario: ScenarioConfig, seed: u64) -> WorldState {
    let salt = match scenario {
        ScenarioConfig::Observable => 0x0b5e_7ab1_e000_0001,
        ScenarioConfig::Partial => 0x9a7_71a1_0000_0002,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);

    let mut cells: Vec<(f64, f64)> = GRID_X
        .iter()
        .flat_map(|&x| GRID_Y.iter().map(move |&y| (x, y)))
        .collect();
    cells.shuffle(&mut rng);
    let mut cells = cells.into_iter();

    let mut colors = Color::ALL.to_vec();
    colors.shuffle(&mut rng);
    let mut cup_colors = Color::ALL.to_vec();
    cup_colors.shuffle(&mut rng);

    let mut objects = BTreeMap::new();
    let block_shapes = [Shape::Cube, Shape::Cylinder, Shape::Triangle];

    match scenario {
        ScenarioConfig::Observable => {
            for &color in &colors[..4] {
                let (x, y) = cells.next().expect("grid has 25 cells");
                let shape = block_shapes[rng.gen_range(0..block_shapes.len())];
                let mass = f64::from(rng.gen_range(5u32..=50)) / 100.0;
                let name = format!("{}_block", color.as_str());
                objects.insert(
                    name.clone(),
                    ObjectState {
                        name,
                        shape,
                        color,
                        height: BLOCK_HEIGHT,
                        mass,
                        position: Vec3::new(x, y, BLOCK_HEIGHT / 2.0),
                        fixed: false,
                        mass_visible: true,
                    },
                );
            }
        }
        ScenarioConfig::Partial => {
            let mut mass_steps: Vec<u32> = (1..=10).collect();
            mass_steps.shuffle(&mut rng);
            for (i, &color) in colors[..3].iter().enumerate() {
                let (x, y) = cells.next().expect("grid has 25 cells");
                let shape = block_shapes[rng.gen_range(0..block_shapes.len())];
                let name = format!("block{}", i + 1);
                objects.insert(
                    name.clone(),
                    ObjectState {
                        name,
                        shape,
                        color,
                        height: BLOCK_HEIGHT,
                        mass: f64::from(mass_steps[i]) * 0.05,
                        position: Vec3::new(x, y, BLOCK_HEIGHT / 2.0),
                        fixed: false,
                        mass_visible: false,
                    },
                );
            }
            let (x, y) = cells.next().expect("grid has 25 cells");
            objects.insert(
                "fixed_block".to_string(),
                ObjectState {
                    name: "fixed_block".to_string(),
                    shape: Shape::Cube,
                    color: colors[3],
                    height: BLOCK_HEIGHT,
                    mass: 2.0,
                    position: Vec3::new(x, y, BLOCK_HEIGHT / 2.0),
                    fixed: true,
                    mass_visible: false,
                },
            );
        }
    }

    for &color in &cup_colors[..2] {
        let (x, y) = cells.next().expect("grid has 25 cells");
        let name = format!("{}_cup", color.as_str());
        objects.insert(
            name.clone(),
            ObjectState {
                name,
                shape: Shape::Cup,
                color,
                height: CUP_HEIGHT,
                mass: 0.15,
                position: Vec3::new(x, y, CUP_HEIGHT / 2.0),
                fixed: true,
                mass_visible: true,
            },
        );
    }

    WorldState {
        objects,
        gripper: GripperState {
            position: Vec3::new(0.3, 0.0, 0.3),
            holding: None,
        },
        bounds: Bounds::WORKSPACE,
        observability: scenario.observability(),
        sensor_log: Vec::new(),
    }
}

fn footprints_overlap(a: &ObjectState, a_pos: Vec3, b: &ObjectState) -> bool {
    let reach = a.half_width() + b.half_width() - FOOTPRINT_EPS;
    (a_pos.x - b.position.x).abs() < reach && (a_pos.y - b.position.y).abs() < reach
}

impl WorldState {
    pub fn object(&self, name: &str) -> ActionResult<&ObjectState> {
        self.objects.get(name).ok_or_else(|| {
            ActionError::new(
                ActionErrorKind::UnknownObject,
                format!("object '{name}' does not exist in the environment"),
            )
        })
    }

    pub fn holding(&self) -> Option<&str> {
        self.gripper.holding.as_deref()
    }

    /// Objects resting on top of `name` (overlapping footprint, higher z).
    pub fn supported_by(&self, name: &str) -> Vec<&str> {
        let Some(base) = self.objects.get(name) else {
            return Vec::new();
        };
        self.objects
            .values()
            .filter(|o| o.name != name && self.holding() != Some(o.name.as_str()))
            .filter(|o| o.position.z > base.position.z && footprints_overlap(base, base.position, o))
            .map(|o| o.name.as_str())
            .collect()
    }

    pub fn pick(&mut self, name: &str) -> ActionResult<()> {
        let obj = self.object(name)?;
        if let Some(held) = self.holding() {
            return Err(ActionError::new(
                ActionErrorKind::AlreadyHolding,
                format!("cannot pick '{name}': the gripper is already holding '{held}'"),
            ));
        }
        if obj.fixed {
            return Err(ActionError::new(
                ActionErrorKind::ObjectFixed,
                format!("cannot pick '{name}': it is fixed in place"),
            ));
        }
        if let Some(top) = self.supported_by(name).first() {
            return Err(ActionError::new(
                ActionErrorKind::UnstableGrasp,
                format!("cannot pick '{name}': '{top}' is stacked on top of it"),
            ));
        }
        let center = obj.position;
        self.gripper.position = center;
        self.gripper.holding = Some(name.to_string());
        Ok(())
    }

    fn held_object(&self, action: &str) -> ActionResult<&ObjectState> {
        let held = self.holding().ok_or_else(|| {
            ActionError::new(
                ActionErrorKind::HandEmpty,
                format!("cannot {action}: the gripper is not holding anything"),
            )
        })?;
        self.object(held)
    }

    fn release_at(&mut self, target: Vec3) {
        let held = self.gripper.holding.take().expect("checked by caller");
        self.objects
            .get_mut(&held)
            .expect("held object exists")
            .position = target;
        self.gripper.position = target;
    }

    pub fn place_on(&mut self, base_name: &str) -> ActionResult<()> {
        let held = self.held_object(&format!("place on '{base_name}'"))?;
        let base = self.object(base_name)?;
        if base.name == held.name {
            return Err(ActionError::new(
                ActionErrorKind::OccupiedTarget,
                format!("cannot place '{}' on itself", held.name),
            ));
        }
        if let Some(top) = self.supported_by(base_name).first() {
            return Err(ActionError::new(
                ActionErrorKind::OccupiedTarget,
                format!("cannot place '{}' on '{base_name}': '{top}' is already on it", held.name),
            ));
        }
        let z = if base.is_cup() {
            base.top()
        } else {
            base.position.z + (base.height + held.height) / 2.0
        };
        let target = Vec3::new(base.position.x, base.position.y, z);
        if !self.bounds.contains(target) {
            return Err(ActionError::new(
                ActionErrorKind::OutOfBounds,
                format!("cannot place '{}' on '{base_name}': target {target} is outside the workspace", held.name),
            ));
        }
        self.release_at(target);
        Ok(())
    }

    pub fn place_at(&mut self, target: Vec3) -> ActionResult<()> {
        let held = self.held_object(&format!("place at {target}"))?;
        if !self.bounds.contains(target) {
            return Err(ActionError::new(
                ActionErrorKind::OutOfBounds,
                format!("cannot place '{}' at {target}: outside the workspace", held.name),
            ));
        }
        if let Some(other) = self
            .objects
            .values()
            .find(|o| o.name != held.name && footprints_overlap(held, target, o))
        {
            return Err(ActionError::new(
                ActionErrorKind::OccupiedTarget,
                format!("cannot place '{}' at {target}: '{}' occupies that spot", held.name, other.name),
            ));
        }
        self.release_at(target);
        Ok(())
    }

    pub fn move_gripper(&mut self, delta: Vec3) -> ActionResult<()> {
        let target = self.gripper.position + delta;
        if !self.bounds.contains(target) {
            return Err(ActionError::new(
                ActionErrorKind::OutOfBounds,
                format!("cannot move the gripper to {target}: outside the workspace"),
            ));
        }
        self.gripper.position = target;
        if let Some(held) = self.gripper.holding.clone() {
            self.objects
                .get_mut(&held)
                .expect("held object exists")
                .position = target;
        }
        Ok(())
    }

    pub fn get_obj_pose(&mut self, name: &str) -> ActionResult<Vec3> {
        let pos = self.object(name)?.position;
        self.sensor_log.push(SensorReading {
            query: "pose".into(),
            object: name.into(),
        });
        Ok(pos)
    }

    pub fn get_obj_mass(&mut self, name: &str) -> ActionResult<f64> {
        self.object(name)?;
        let obj = self.objects.get_mut(name).expect("checked above");
        obj.mass_visible = true;
        let mass = obj.mass;
        self.sensor_log.push(SensorReading {
            query: "mass".into(),
            object: name.into(),
        });
        Ok(mass)
    }

    /// Canonical text listing used as the environment part of every prompt.
    pub fn observe(&self) -> String {
        let mut out = String::new();
        let b = &self.bounds;
        let _ = writeln!(
            out,
            "workspace bounds: x=[{:.3}, {:.3}] y=[{:.3}, {:.3}] z=[{:.3}, {:.3}]",
            b.min.x, b.max.x, b.min.y, b.max.y, b.min.z, b.max.z
        );
        let _ = writeln!(
            out,
            "gripper: position={} holding={}",
            self.gripper.position,
            self.holding().unwrap_or("none")
        );
        for obj in self.objects.values() {
            let _ = write!(
                out,
                "object {}: shape={} color={} position={} height={:.3}",
                obj.name,
                obj.shape.as_str(),
                obj.color.as_str(),
                obj.position,
                obj.height
            );
            if obj.mass_visible {
                let _ = write!(out, " mass={:.3}", obj.mass);
            }
            let _ = writeln!(out, " fixed={}", obj.fixed);
        }
        out
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("world state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.bounds.contains(self.gripper.position) {
            return Err(format!("gripper {} out of bounds", self.gripper.position));
        }
        for (key, obj) in &self.objects {
            if key != &obj.name {
                return Err(format!("object keyed '{key}' is named '{}'", obj.name));
            }
            if obj.height <= 0.0 || obj.mass <= 0.0 {
                return Err(format!("object '{key}' has non-positive height or mass"));
            }
            if !self.bounds.contains(obj.position) {
                return Err(format!("object '{key}' at {} out of bounds", obj.position));
            }
        }
        if let Some(held) = self.holding() {
            let obj = self
                .objects
                .get(held)
                .ok_or_else(|| format!("holding unknown object '{held}'"))?;
            if obj.fixed {
                return Err(format!("holding fixed object '{held}'"));
            }
            if obj.position != self.gripper.position {
                return Err(format!("held object '{held}' does not track the gripper"));
            }
        }
        let resting: Vec<&ObjectState> = self
            .objects
            .values()
            .filter(|o| Some(o.name.as_str()) != self.holding())
            .collect();
        for (i, a) in resting.iter().enumerate() {
            for b in &resting[i + 1..] {
                if (a.position.x - b.position.x).abs() < 1e-9
                    && (a.position.y - b.position.y).abs() < 1e-9
                    && a.position.z == b.position.z
                {
                    return Err(format!("'{}' and '{}' occupy the same spot", a.name, b.name));
                }
            }
        }
        Ok(())
    }
}
