#![allow(dead_code)]

pub mod cli;
pub mod solar;
pub mod synthetic;
