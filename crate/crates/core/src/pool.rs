//! The local collection of instances believed to exist in the API.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::ExistenceState;
use crate::schema::{generate_instance, ResourceInstance, ResourceSchema};

/// Attempts at drawing an instance with an unused id before giving up.
pub const MAX_ID_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PoolError {
    #[error("`{resource}`: no unused id after {MAX_ID_RETRIES} attempts")]
    IdCollision { resource: String },
    #[error("`{resource}`: no existing instance left to select")]
    Exhausted { resource: String },
    #[error("`{resource}`: setup hook failed: {message}")]
    Setup { resource: String, message: String },
    #[error("setupInstances must be at least 1")]
    EmptySetup,
}

/// User hooks around a pool's lifetime. Implementations hand the collection to the application.
pub trait Hooks {
    /// Receives the freshly generated collection; an error skips the rest of that iteration.
    fn setup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String>;
    /// Receives the final collection; errors are reported as warnings only.
    fn cleanup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String>;
}

/// No setup or cleanup: instances are assumed to be present already.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHooks;

impl Hooks for NoHooks {
    fn setup(&mut self, _: &str, _: &[ResourceInstance]) -> Result<(), String> {
        Ok(())
    }
    fn cleanup(&mut self, _: &str, _: &[ResourceInstance]) -> Result<(), String> {
        Ok(())
    }
}

impl<H: Hooks + ?Sized> Hooks for &mut H {
    fn setup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        (**self).setup(resource, instances)
    }
    fn cleanup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        (**self).cleanup(resource, instances)
    }
}

/// Which branch a selection took.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub instance: ResourceInstance,
    pub state: ExistenceState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourcePool {
    schema: ResourceSchema,
    existing: BTreeMap<String, ResourceInstance>,
    consumed: BTreeSet<String>,
}

fn id_of(schema: &ResourceSchema, instance: &ResourceInstance) -> String {
    instance.text_of(&schema.id_field).unwrap_or_default()
}

impl ResourcePool {
    pub fn empty(schema: ResourceSchema) -> Self {
        ResourcePool {
            schema,
            existing: BTreeMap::new(),
            consumed: BTreeSet::new(),
        }
    }

    /// A pool of `count` generated instances with distinct ids.
    pub fn generate<R: Rng + ?Sized>(schema: &ResourceSchema, count: usize, rng: &mut R) -> Result<Self, PoolError> {
        if count == 0 {
            return Err(PoolError::EmptySetup);
        }
        let mut pool = Self::empty(schema.clone());
        for _ in 0..count {
            let inst = pool.fresh_instance(rng)?;
            pool.apply_transition(&inst, ExistenceState::Exists);
        }
        Ok(pool)
    }

    pub fn resource(&self) -> &str {
        &self.schema.name
    }

    pub fn schema(&self) -> &ResourceSchema {
        &self.schema
    }

    pub fn id_of(&self, instance: &ResourceInstance) -> String {
        id_of(&self.schema, instance)
    }

    pub fn len(&self) -> usize {
        self.existing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.existing.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.existing.contains_key(id)
    }

    pub fn was_used(&self, id: &str) -> bool {
        self.consumed.contains(id)
    }

    /// Existing instances in id order.
    pub fn instances(&self) -> Vec<ResourceInstance> {
        self.existing.values().cloned().collect()
    }

    /// A generated instance whose id was never seen by this pool.
    pub fn fresh_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ResourceInstance, PoolError> {
        for _ in 0..MAX_ID_RETRIES {
            let inst = generate_instance(&self.schema, rng);
            let id = id_of(&self.schema, &inst);
            if !id.is_empty() && !self.existing.contains_key(&id) && !self.consumed.contains(&id) {
                return Ok(inst);
            }
        }
        Err(PoolError::IdCollision {
            resource: self.schema.name.clone(),
        })
    }

    /// Picks an instance satisfying `pre`. ANY flips a fair coin between the two branches.
    pub fn select<R: Rng + ?Sized>(&mut self, pre: ExistenceState, rng: &mut R) -> Result<Selection, PoolError> {
        let state = match pre {
            ExistenceState::Any if rng.gen::<bool>() => ExistenceState::Exists,
            ExistenceState::Any => ExistenceState::Missing,
            s => s,
        };
        let instance = match state {
            ExistenceState::Exists => {
                if self.existing.is_empty() {
                    return Err(PoolError::Exhausted {
                        resource: self.schema.name.clone(),
                    });
                }
                let k = rng.gen_range(0..self.existing.len());
                self.existing.values().nth(k).cloned().expect("index within len")
            }
            _ => self.fresh_instance(rng)?,
        };
        self.consumed.insert(id_of(&self.schema, &instance));
        Ok(Selection { instance, state })
    }

    /// Records the state a request left `instance` in.
    pub fn apply_transition(&mut self, instance: &ResourceInstance, post: ExistenceState) {
        let id = id_of(&self.schema, instance);
        self.consumed.insert(id.clone());
        match post {
            ExistenceState::Exists => {
                self.existing.insert(id, instance.clone());
            }
            ExistenceState::Missing => {
                self.existing.remove(&id);
            }
            ExistenceState::Any => {}
        }
    }

    /// Empties the pool, returning what was left.
    pub fn drain(&mut self) -> Vec<ResourceInstance> {
        core::mem::take(&mut self.existing).into_values().collect()
    }
}

/// Generates the setup collection and hands it to the setup hook.
pub fn setup_pool<R: Rng + ?Sized, H: Hooks + ?Sized>(
    schema: &ResourceSchema,
    setup_instances: usize,
    rng: &mut R,
    hooks: &mut H,
) -> Result<ResourcePool, PoolError> {
    let pool = ResourcePool::generate(schema, setup_instances, rng)?;
    hooks
        .setup(&schema.name, &pool.instances())
        .map_err(|message| PoolError::Setup {
            resource: schema.name.clone(),
            message,
        })?;
    Ok(pool)
}

/// Hands the final collection to the cleanup hook and clears the pool.
/// A hook failure comes back as a warning string.
pub fn cleanup_pool<H: Hooks + ?Sized>(pool: &mut ResourcePool, hooks: &mut H) -> Option<String> {
    let left = pool.drain();
    let resource = pool.resource();
    hooks
        .cleanup(resource, &left)
        .err()
        .map(|e| alloc::format!("`{resource}`: cleanup hook failed: {e}"))
}
