//! Abstract locations and access events.
//!
//! A location is a variable declaration site tagged with its data location.
//! Mapping/array indices are collapsed (one location per variable) and struct
//! fields are folded into their variable, so dependence classification may
//! over-report but never under-reports.

use crate::frontend::ast::{DataLocation, NodeId};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AbstractLocation {
    pub decl: NodeId,
    pub data_location: DataLocation,
}

impl AbstractLocation {
    pub fn new(decl: NodeId, data_location: DataLocation) -> Self {
        AbstractLocation { decl, data_location }
    }

    pub fn is_storage(&self) -> bool {
        self.data_location == DataLocation::Storage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum AccessMode {
    Create,
    Read,
    Write,
    Delete,
}

/// One variable access at one program point (statement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AccessEvent {
    pub point: NodeId,
    pub target: AbstractLocation,
    pub mode: AccessMode,
}
