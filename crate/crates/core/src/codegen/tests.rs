use std::path::PathBuf;

use super::*;
use crate::fixture::{load_spec, Fixture};
use crate::marking::Marking;
use crate::registry::RegistrySpec;

fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

fn grain() -> Fixture {
    Fixture::load(fixtures().join("grain-title")).unwrap()
}

fn spec(path: &str) -> RegistrySpec {
    load_spec(&fixtures().join(path)).unwrap()
}

/// Body of the first function whose header starts with `header`, up to
/// the closing brace at the same indentation.
fn function_body<'a>(text: &'a str, header: &str) -> &'a str {
    let start = text.find(header).unwrap_or_else(|| panic!("no `{header}`"));
    let rest = &text[start..];
    let end = rest.find("\n    }\n").unwrap();
    &rest[..end]
}

fn parse_hex(s: &str) -> Marking {
    let digits = s.trim_start_matches("0x");
    Marking(ethnum::U256::from_str_radix(digits, 16).unwrap())
}

#[test]
fn task_names_become_identifiers() {
    assert_eq!(task_function_name("Create Grain Title"), "Create_grain_title");
    assert_eq!(task_function_name("On-Site Loading Inspected"), "On_site_loading_inspected");
    assert_eq!(task_function_name("2nd check"), "Task_2nd_check");
}

#[test]
fn token_contract_shape() {
    let RegistrySpec::Fungible(lrk) = spec("grain-title/lorikeet-coin.json") else { panic!() };
    let text = gen_fungible(&lrk).rendered_text;
    assert!(text.starts_with("pragma solidity ^0.5.8;\n"));
    assert!(text.contains("contract LorikeetCoin {"));
    assert!(text.contains("return \"Lorikeet Coin\";"));
    assert!(text.contains("return \"LRK\";"));
    assert!(text.contains("function decimals() external pure returns (uint8) {\n        return 2;"));
    assert!(text.contains("supply = 1000000;"));
    assert_eq!(text.matches("emit Transfer(address(0), ").count(), 3);
    assert!(!text.contains("function mint("));
    assert!(!text.contains("function burn("));

    let mut mintable = lrk.clone();
    mintable.is_mintable = true;
    mintable.minter_addresses = vec![lrk.initially_distributed_accounts[0].0];
    let text = gen_fungible(&mintable).rendered_text;
    assert!(text.contains("function mint(address account, uint256 amount) external returns (bool) {"));
    assert!(text.contains("minters[0x52908400098527886E0F7030069857D2E4169EE7] = true;"));
}

#[test]
fn single_registry_shape() {
    let RegistrySpec::NonFungible(title) = spec("grain-title/grain-title.json") else { panic!() };
    let unit = gen_nonfungible(&title);
    assert_eq!(unit.file_name, "GrainTitleRegistry.sol");
    assert_eq!(unit.contracts.len(), 1);
    let text = unit.rendered_text;
    assert!(text.contains("returns (uint256 weight, uint256 quality)"));
    assert!(function_body(&text, "function record_create(").contains("onlyProcess"));
    assert!(function_body(&text, "function record_ownership_transfer(").contains("onlyProcess"));
    assert!(!text.contains("function record_update_"));
    for f in ["balanceOf(", "ownerOf(", "transferFrom(", "approve(", "getApproved(", "setApprovalForAll(", "isApprovedForAll("] {
        assert!(text.contains(&format!("function {f}")), "missing {f}");
    }
}

#[test]
fn distributed_registry_has_record_contract() {
    let RegistrySpec::NonFungible(cert) = spec("quality-tracing/distributed/certificate-of-origin.json") else { panic!() };
    let unit = gen_nonfungible(&cert);
    assert_eq!(unit.contracts.len(), 2);
    assert!(unit.contracts[0].starts_with("contract CertificateOfOriginRecord {"));
    assert!(unit.contracts[1].starts_with("contract CertificateOfOriginRegistry {"));
    let text = unit.rendered_text;
    assert!(text.contains("new CertificateOfOriginRecord("));
    assert!(text.contains("address[] public recordList;"));
    assert!(text.contains("event TestReportChanged("));
    assert!(text.contains("function setAccessController(address controller)"));
}

#[test]
fn history_tracked_attribute_emits_change_event_only_when_tracked() {
    let RegistrySpec::NonFungible(cert) = spec("quality-tracing/certificate-of-origin.json") else { panic!() };
    let text = gen_nonfungible(&cert).rendered_text;
    assert!(text.contains("function record_update_testReport("));
    assert!(text.contains("function record_update_freightyardReport("));
    assert!(!text.contains("function record_update_factoryReport("));
    assert!(text.contains("emit TestReportChanged("));
    assert!(!text.contains("FreightyardReportChanged"));
    assert!(!text.contains("function record_ownership_transfer("));
}

#[test]
fn grain_process_uses_hard_coded_addresses() {
    let f = grain();
    let text = gen_process(&f.model, &f.automaton).rendered_text;
    assert!(text.contains("address constant addressOfGrainTitleRegistry = 0xA9998dBe75D795556eA821E37cD2DE1F373BFd91;"));
    assert!(text.contains("address constant addressOfLorikeetCoin = 0xD3E4EBe81b55EA73b559da31ADf2CAc3b254ea11;"));
    assert!(text.contains("constructor(address[] memory _participants) public {"));
    assert!(text.contains("function record_get_attrs(address record_id) external returns (uint256 weight, uint256 quality);"));
}

#[test]
fn missing_address_becomes_one_constructor_parameter() {
    let f = Fixture::load_with(fixtures().join("grain-title"), "process-noaddr.bpmn").unwrap();
    let text = gen_process(&f.model, &f.automaton).rendered_text;
    let ctor = text.lines().find(|l| l.trim_start().starts_with("constructor(")).unwrap();
    assert_eq!(ctor.matches("address _addressOf").count(), 1);
    assert!(ctor.contains("address _addressOfGrainTitleRegistry"));
    assert!(text.contains("address public addressOfGrainTitleRegistry;"));
    assert!(text.contains("address constant addressOfLorikeetCoin = "));
    assert!(text.contains("new ProcessMonitor(_participants, _addressOfGrainTitleRegistry)"));
}

#[test]
fn create_title_masks_match_the_automaton() {
    let f = grain();
    let text = gen_process(&f.model, &f.automaton).rendered_text;
    let body = function_body(&text, "function Create_grain_title(uint preconditionsp");
    let pre_at = body.find("preconditionsp & 0x").unwrap() + "preconditionsp & ".len();
    let pre_hex: String = body[pre_at..].chars().take_while(|c| c.is_ascii_hexdigit() || *c == 'x').collect();
    let post_at = body.find(") | 0x").unwrap() + ") | ".len();
    let post_hex: String = body[post_at..].chars().take_while(|c| c.is_ascii_hexdigit() || *c == 'x').collect();
    let (pre, post) = (parse_hex(&pre_hex), parse_hex(&post_hex));
    assert_eq!(pre.count(), 2);
    assert_eq!(post.count(), 1);
    let t = &f.automaton.external[f.automaton.external_index("Create Grain Title").unwrap()];
    assert_eq!(t.alternatives.len(), 1);
    assert_eq!(pre, t.alternatives[0].pre);
    assert_eq!(post, t.alternatives[0].post);
    assert!(body.contains(&format!("preconditionsp & {pre_hex} == {pre_hex}")));
}

#[test]
fn bindings_are_injected_once_per_task() {
    let f = grain();
    let text = gen_process(&f.model, &f.automaton).rendered_text;
    let create = function_body(&text, "function Create_grain_title(uint preconditionsp");
    assert!(create.contains("_titleId = instanceOfGrainTitleRegistry.record_create(address(this), _consignmentWeight, _grainQuality);"));
    let swap = function_body(&text, "function Asset_swap(uint preconditionsp");
    assert_eq!(swap.matches("instanceOfGrainTitleRegistry.record_ownership_transfer(_titleId, _buyer);").count(), 1);
    assert_eq!(swap.matches("instanceOfLorikeetCoin.transfer(_farmer, _price);").count(), 1);
    for b in &f.model.invocations {
        let node = f.model.find_task(&b.source_task).unwrap();
        if !node.kind.is_external() {
            continue;
        }
        let header = format!("function {}(uint preconditionsp", task_function_name(&node.name));
        let body = function_body(&text, &header);
        assert_eq!(body.matches(&format!(".{}(", b.fn_name)).count(), 1, "{} in {}", b.fn_name, node.name);
    }
}

#[test]
fn step_covers_every_auto_transition() {
    let f = grain();
    let text = gen_process(&f.model, &f.automaton).rendered_text;
    let step = function_body(&text, "function step(uint m)");
    for t in &f.automaton.autos {
        assert!(step.contains(&format!("// {}", t.name)), "{}", t.name);
    }
    assert!(step.contains(&format!("fired <= {}", 4 * f.automaton.flow_ids.len())));
    assert!(text.contains("_consignmentWeight = subU(_truckWeightWithConsignment, _truckWeightWithoutConsignment);"));
    assert!(text.contains("function subU("));
    assert!(!text.contains("function addU("));
}

#[test]
fn output_is_deterministic() {
    let f = grain();
    assert_eq!(gen_all(&f.model, &f.automaton, &f.specs), gen_all(&f.model, &f.automaton, &f.specs));
}

#[test]
fn literal_escaping() {
    assert_eq!(string_literal("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    assert_eq!(string_literal("é"), "\"\\xc3\\xa9\"");
    assert_eq!(sol_ident("9 lives"), "_9_lives");
}
