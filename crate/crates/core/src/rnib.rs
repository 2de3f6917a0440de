//! Radio-network information base (R-NIB): typed records describing the RAN
//! nodes the platform knows about, stored in their own SDL namespace.
//!
//! When a simulated node attaches, the E2 layer writes a [`NodebInfo`] here;
//! applications discover nodes with [`Rnib::get_list_gnb_ids`], inspect them
//! with [`Rnib::get_nodeb`], and look up service-model definitions by OID
//! with [`Rnib::get_ran_function_definition`].

use crate::sdl::{SdlError, SdlStore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// SDL namespace holding the node records.
pub const RNIB_NAMESPACE: &str = "rnib";

const GNB_KEY_PREFIX: &str = "GNB:";

/// PLMN + node id, the globally unique identity of a gNodeB.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalNbId {
    pub plmn_id: String,
    pub nb_id: String,
}

/// One service model exposed by a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RanFunction {
    pub ran_function_id: u32,
    /// Object identifier of the service model (e.g. the KPM monitor OID).
    pub oid: String,
    /// Service-model definition as published by the node.
    pub definition: serde_json::Value,
    pub revision: u32,
}

/// Everything the platform records about one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodebInfo {
    /// Platform-assigned name, `gnb_<plmn>_<nodeb>_<hash8>`.
    pub inventory_name: String,
    pub global_nb_id: GlobalNbId,
    pub node_type: String,
    pub connection_status: String,
    pub ran_functions: Vec<RanFunction>,
}

/// Identity pair returned by the node listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnbIdentity {
    pub inventory_name: String,
    pub global_nb_id: GlobalNbId,
}

/// Build the platform inventory name for a node: `gnb_<plmn>_<nodeb>_` plus
/// the first eight hex digits of SHA-256 over the node's canonical identity
/// string. Deterministic: the same identity always yields the same name.
pub fn inventory_name(plmn_id: &str, nb_id: &str) -> String {
    let digest = Sha256::digest(format!("gnb|{plmn_id}|{nb_id}").as_bytes());
    format!("gnb_{}_{}_{}", plmn_id, nb_id, hex::encode(&digest[..4]))
}

/// Typed view over the R-NIB namespace.
#[derive(Debug, Clone)]
pub struct Rnib {
    sdl: Arc<SdlStore>,
}

impl Rnib {
    pub fn new(sdl: Arc<SdlStore>) -> Self {
        Rnib { sdl }
    }

    fn key(inventory_name: &str) -> String {
        format!("{GNB_KEY_PREFIX}{inventory_name}")
    }

    pub fn put_nodeb(&self, info: &NodebInfo) -> Result<(), SdlError> {
        self.sdl
            .set_json(RNIB_NAMESPACE, &Self::key(&info.inventory_name), info)
    }

    pub fn remove_nodeb(&self, inventory_name: &str) -> Result<(), SdlError> {
        self.sdl.delete(RNIB_NAMESPACE, &Self::key(inventory_name))
    }

    pub fn get_nodeb(&self, inventory_name: &str) -> Option<NodebInfo> {
        self.sdl
            .get_json(RNIB_NAMESPACE, &Self::key(inventory_name))
            .ok()
            .flatten()
    }

    /// Identities of every known gNodeB, ascending by inventory name.
    pub fn get_list_gnb_ids(&self) -> Vec<GnbIdentity> {
        self.sdl
            .find_and_get(RNIB_NAMESPACE, GNB_KEY_PREFIX)
            .values()
            .filter_map(|bytes| serde_json::from_slice::<NodebInfo>(bytes).ok())
            .map(|info| GnbIdentity {
                inventory_name: info.inventory_name,
                global_nb_id: info.global_nb_id,
            })
            .collect()
    }

    /// Definitions of every RAN function on `inventory_name` whose service
    /// model matches `oid` (a node may expose several revisions).
    pub fn get_ran_function_definition(
        &self,
        inventory_name: &str,
        oid: &str,
    ) -> Vec<serde_json::Value> {
        self.get_nodeb(inventory_name)
            .map(|info| {
                info.ran_functions
                    .iter()
                    .filter(|f| f.oid == oid)
                    .map(|f| f.definition.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// The node's RAN function with the given numeric id, if any.
    pub fn ran_function_by_id(&self, inventory_name: &str, id: u32) -> Option<RanFunction> {
        self.get_nodeb(inventory_name)
            .and_then(|info| info.ran_functions.into_iter().find(|f| f.ran_function_id == id))
    }

    /// Update only the connection status of a stored node.
    pub fn set_connection_status(
        &self,
        inventory_name: &str,
        status: &str,
    ) -> Result<(), SdlError> {
        if let Some(mut info) = self.get_nodeb(inventory_name) {
            info.connection_status = status.to_string();
            self.put_nodeb(&info)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(inv: &str, plmn: &str, nb: &str) -> NodebInfo {
        NodebInfo {
            inventory_name: inv.to_string(),
            global_nb_id: GlobalNbId {
                plmn_id: plmn.to_string(),
                nb_id: nb.to_string(),
            },
            node_type: "GNB".to_string(),
            connection_status: "CONNECTED".to_string(),
            ran_functions: vec![RanFunction {
                ran_function_id: 200,
                oid: "1.3.6.1.4.1.53148.1.2.2.2".to_string(),
                definition: serde_json::json!({"reportStyles": [1]}),
                revision: 1,
            }],
        }
    }

    #[test]
    fn inventory_name_shape_and_stability() {
        let name = inventory_name("734", "733");
        // gnb_<plmn>_<nodeb>_<8 hex digits>
        assert!(name.starts_with("gnb_734_733_"));
        let suffix = name.rsplit('_').next().unwrap();
        assert_eq!(suffix.len(), 8);
        assert!(suffix.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
        // Deterministic across calls, distinct across identities.
        assert_eq!(name, inventory_name("734", "733"));
        assert_ne!(name, inventory_name("734", "734"));
    }

    #[test]
    fn put_list_get_round_trip() {
        let sdl = Arc::new(SdlStore::new());
        let rnib = Rnib::new(sdl);
        let a = sample(&inventory_name("734", "733"), "734", "733");
        let b = sample(&inventory_name("310", "410"), "310", "410");
        rnib.put_nodeb(&a).unwrap();
        rnib.put_nodeb(&b).unwrap();

        let ids = rnib.get_list_gnb_ids();
        assert_eq!(ids.len(), 2);
        assert!(ids.iter().any(|i| i.inventory_name == a.inventory_name));

        let got = rnib.get_nodeb(&a.inventory_name).unwrap();
        assert_eq!(got, a);
        assert!(rnib.get_nodeb("gnb_000_000_00000000").is_none());
    }

    #[test]
    fn ran_function_lookup_by_oid_and_id() {
        let sdl = Arc::new(SdlStore::new());
        let rnib = Rnib::new(sdl);
        let node = sample(&inventory_name("734", "733"), "734", "733");
        rnib.put_nodeb(&node).unwrap();

        let defs = rnib.get_ran_function_definition(
            &node.inventory_name,
            "1.3.6.1.4.1.53148.1.2.2.2",
        );
        assert_eq!(defs, vec![serde_json::json!({"reportStyles": [1]})]);
        assert!(rnib
            .get_ran_function_definition(&node.inventory_name, "9.9.9")
            .is_empty());
        assert_eq!(
            rnib.ran_function_by_id(&node.inventory_name, 200).unwrap().oid,
            "1.3.6.1.4.1.53148.1.2.2.2"
        );
        assert!(rnib.ran_function_by_id(&node.inventory_name, 201).is_none());
    }

    #[test]
    fn connection_status_updates_in_place() {
        let sdl = Arc::new(SdlStore::new());
        let rnib = Rnib::new(sdl);
        let node = sample(&inventory_name("734", "733"), "734", "733");
        rnib.put_nodeb(&node).unwrap();
        rnib.set_connection_status(&node.inventory_name, "DISCONNECTED").unwrap();
        assert_eq!(
            rnib.get_nodeb(&node.inventory_name).unwrap().connection_status,
            "DISCONNECTED"
        );
    }
}
