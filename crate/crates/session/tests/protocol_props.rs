use std::io::Cursor;

use neuroswarm_session::protocol::{encode, read_frame, FrameError, WireMessage};
use neuroswarm_session::Command;
use proptest::prelude::*;

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (any::<u32>(), any::<u32>()).prop_map(|(agent_id, task_id)| Command::AssignAgent { agent_id, task_id }),
        (prop::collection::vec(any::<u32>(), 0..8), prop::collection::vec(any::<u32>(), 0..8))
            .prop_map(|(agent_ids, task_ids)| Command::AssignCluster { agent_ids, task_ids }),
        (1u8..=5).prop_map(|level| Command::SetLevel { level }),
        Just(Command::Pause),
        Just(Command::Resume),
        any::<u64>().prop_map(|decision_id| Command::ConfirmSuggestion { decision_id }),
        any::<u64>().prop_map(|decision_id| Command::DismissSuggestion { decision_id }),
    ]
}

proptest! {
    #[test]
    fn frame_streams_decode_in_order(cmds in prop::collection::vec((any::<u64>(), command()), 1..20)) {
        let msgs: Vec<WireMessage> = cmds.into_iter().map(|(id, command)| WireMessage::Command { id, command }).collect();
        let bytes: Vec<u8> = msgs.iter().flat_map(encode).collect();
        let mut r = Cursor::new(bytes);
        for m in &msgs {
            prop_assert_eq!(&read_frame(&mut r).unwrap(), m);
        }
        prop_assert!(matches!(read_frame(&mut r), Err(FrameError::Closed)));
    }

    #[test]
    fn truncated_frames_never_decode(cmd in command(), cut in 1usize..16) {
        let bytes = encode(&WireMessage::Command { id: 1, command: cmd });
        let keep = bytes.len().saturating_sub(cut).max(1);
        let mut r = Cursor::new(bytes[..keep].to_vec());
        prop_assert!(read_frame(&mut r).is_err());
    }
}
