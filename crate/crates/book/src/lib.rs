//! Doctest harness for the guide in `book/`. Each chapter becomes a module so
//! a failing snippet points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/seeds.md")]
pub mod seeds {}
#[doc = include_str!("../../../book/src/scenes.md")]
pub mod scenes {}
#[doc = include_str!("../../../book/src/navigation.md")]
pub mod navigation {}
#[doc = include_str!("../../../book/src/crowd.md")]
pub mod crowd {}
#[doc = include_str!("../../../book/src/events.md")]
pub mod events {}
#[doc = include_str!("../../../book/src/audio.md")]
pub mod audio {}
#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}
#[doc = include_str!("../../../book/src/remote.md")]
pub mod remote {}
