//! On-disk state of a CLI-managed deployment.
//!
//! The CLI is a discrete-command tool over a state directory: the chart
//! repository, the SDL journal, and small JSON records of what the operator
//! installed, attached, and routed. Commands that need a live deployment
//! rebuild one by replaying those records on a fresh simulated clock — time
//! restarts at zero every invocation — so identical state always produces
//! an identical runtime. The SDL journal is the only memory apps carry from
//! one invocation to the next; subscription-manager records are rebuilt by
//! the replay and therefore wiped from storage before it runs.

use anyhow::{anyhow, Context, Result};
use miniric_core::appmgr::ChartRepo;
use miniric_core::e2::NodeConfig;
use miniric_core::ric::Ric;
use miniric_core::sdl::SdlStore;
use miniric_core::submgr::SUBMGR_NAMESPACE;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// One installed app, in install order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub name: String,
    pub version: String,
    /// Operator override of the controls section, reapplied after install.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls_override: Option<Value>,
}

/// One attached E2 node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub inventory_name: String,
    pub config: NodeConfig,
    #[serde(default = "yes")]
    pub connected: bool,
    #[serde(default = "yes")]
    pub responsive: bool,
}

fn yes() -> bool {
    true
}

/// The deployment's state directory.
#[derive(Debug, Clone)]
pub struct Home {
    pub dir: PathBuf,
}

impl Home {
    /// Resolve the backend directory: `--home`, then `MINIRIC_ENDPOINT`,
    /// then `./.miniric`.
    pub fn resolve(flag: Option<PathBuf>) -> Home {
        let dir = flag
            .or_else(|| std::env::var_os("MINIRIC_ENDPOINT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".miniric"));
        Home { dir }
    }

    pub fn charts_dir(&self) -> PathBuf {
        self.dir.join("charts")
    }

    pub fn sdl_path(&self) -> PathBuf {
        self.dir.join("sdl.jsonl")
    }

    fn instances_path(&self) -> PathBuf {
        self.dir.join("instances.json")
    }

    fn nodes_path(&self) -> PathBuf {
        self.dir.join("nodes.json")
    }

    fn routes_path(&self) -> PathBuf {
        self.dir.join("routes.json")
    }

    fn read_list<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<Vec<T>> {
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn write_list<T: Serialize>(&self, path: &Path, items: &[T]) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let text = serde_json::to_string_pretty(items)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load_instances(&self) -> Result<Vec<InstanceRecord>> {
        self.read_list(&self.instances_path())
    }

    pub fn save_instances(&self, items: &[InstanceRecord]) -> Result<()> {
        self.write_list(&self.instances_path(), items)
    }

    pub fn load_nodes(&self) -> Result<Vec<NodeRecord>> {
        self.read_list(&self.nodes_path())
    }

    pub fn save_nodes(&self, items: &[NodeRecord]) -> Result<()> {
        self.write_list(&self.nodes_path(), items)
    }

    /// Route updates staged by the operator, applied in order after replay.
    pub fn load_routes(&self) -> Result<Vec<String>> {
        self.read_list(&self.routes_path())
    }

    pub fn save_routes(&self, items: &[String]) -> Result<()> {
        self.write_list(&self.routes_path(), items)
    }

    pub fn open_charts(&self) -> Result<ChartRepo> {
        let dir = self.charts_dir();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        ChartRepo::open(&dir).with_context(|| format!("opening chart repository {}", dir.display()))
    }

    pub fn open_sdl(&self) -> Result<Arc<SdlStore>> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let store = SdlStore::open(self.sdl_path())
            .map_err(|e| anyhow!("opening SDL journal: {e}"))?;
        Ok(Arc::new(store))
    }

    /// Build the live deployment this directory describes.
    pub fn build_runtime(&self) -> Result<Ric> {
        let charts = self.open_charts()?;
        let sdl = self.open_sdl()?;
        // Subscription records are rebuilt by the replay below; stale rows
        // from the previous process would double-count.
        for key in sdl.find_keys(SUBMGR_NAMESPACE, "") {
            let _ = sdl.delete(SUBMGR_NAMESPACE, &key);
        }
        let ric = Ric::with_parts(miniric_demos::catalog(), charts, sdl);
        ric.services
            .a1
            .borrow_mut()
            .restore_from_storage(&ric.services);

        for node in self.load_nodes()? {
            let name = ric
                .attach_node(node.config)
                .map_err(|e| anyhow!("replaying node {}: {e}", node.inventory_name))?;
            if !node.connected {
                ric.set_node_connected(&name, false);
            }
            if !node.responsive {
                ric.set_node_responsive(&name, false);
            }
        }
        // Routes go in before the apps: an app's first sends happen the
        // moment it is installed, and operators stage routes ahead of that.
        for update in self.load_routes()? {
            ric.apply_route_update(&update)
                .map_err(|e| anyhow!("replaying route update: {e}"))?;
        }
        for inst in self.load_instances()? {
            ric.install_with(
                &inst.name,
                Some(&inst.version),
                inst.controls_override.as_ref(),
            )
            .map_err(|e| anyhow!("replaying install of {}: {e}", inst.name))?;
        }
        ric.settle();
        Ok(ric)
    }
}
