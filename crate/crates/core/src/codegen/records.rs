use super::{sol_type, Loc, SourceUnit, Writer};
use crate::registry::{pascal_case, CreatePolicy, NonFungibleRegistrySpec, RecordPolicy, RegistryType};

fn policy_modifier(p: RecordPolicy) -> &'static str {
    match p {
        RecordPolicy::ProcessOnly => "onlyProcess",
        RecordPolicy::Owner => "onlyRecordOwner(record_id)",
        RecordPolicy::OwnerOrRegistryOwner => "onlyRecordOwnerOrRegistryOwner(record_id)",
    }
}

fn change_event(attr: &str) -> String {
    format!("{}Changed", pascal_case(attr))
}

pub fn gen_nonfungible(spec: &NonFungibleRegistrySpec) -> SourceUnit {
    let name = spec.contract_name();
    let record = spec.record_contract_name();
    let distributed = spec.registry_type == RegistryType::Distributed;
    let mut contracts = Vec::new();
    if distributed {
        contracts.push(record_contract(spec, &record));
    }

    let create = spec.create_policy();
    let update = spec.update_policy();
    let transfer = spec.transfer_policy();
    let updatable: Vec<_> = spec.attributes.iter().filter(|a| a.updatable).collect();
    let uses = |p: RecordPolicy| {
        (!updatable.is_empty() && update == p) || transfer == Some(p)
    };
    let fn_ac = spec.is_registry_function_access_control_enabled;
    let by_sc = spec.is_access_control_by_smart_contract_enabled;

    let mut w = Writer::new();
    w.open(format!("contract {name} {{"));
    if !distributed {
        w.open("struct Record {");
        for a in &spec.attributes {
            w.line(format!("{} {};", sol_type(a.ty, Loc::Stack), a.name));
        }
        w.close("}");
        w.blank();
    }
    w.line("event Transfer(address indexed from, address indexed to, uint256 indexed tokenId);");
    w.line("event Approval(address indexed owner, address indexed approved, uint256 indexed tokenId);");
    w.line("event ApprovalForAll(address indexed owner, address indexed operator, bool approved);");
    w.line("event RecordCreated(address indexed record_id, address indexed owner);");
    for a in spec.attributes.iter().filter(|a| a.history_tracked) {
        let t = sol_type(a.ty, Loc::Stack);
        w.line(format!(
            "event {}(address indexed record_id, {t} oldValue, {t} newValue, address changedBy);",
            change_event(&a.name)
        ));
    }
    w.blank();
    w.line("address public registryOwner;");
    w.line("uint256 public recordCount;");
    if distributed {
        w.line("address[] public recordList;");
    } else {
        w.line("mapping(address => Record) private records;");
    }
    w.line("mapping(address => address) private owners;");
    w.line("mapping(address => uint256) private ownedCount;");
    w.line("mapping(address => address) private approvals;");
    w.line("mapping(address => mapping(address => bool)) private operators;");
    w.line("mapping(address => bool) private processes;");
    if fn_ac {
        w.line("mapping(address => bool) private granted;");
    }
    if by_sc {
        w.line("address public accessController;");
    }
    w.blank();

    w.open("modifier onlyRegistryOwner() {");
    w.line("require(msg.sender == registryOwner, \"caller is not the registry owner\");");
    w.line("_;");
    w.close("}");
    w.blank();
    w.open("modifier onlyProcess() {");
    w.line("require(processes[msg.sender], \"caller is not an authorized process\");");
    w.line("_;");
    w.close("}");
    w.blank();
    if fn_ac {
        w.open("modifier onlyGranted() {");
        w.line("require(granted[msg.sender] || msg.sender == registryOwner, \"caller has no access\");");
        w.line("_;");
        w.close("}");
        w.blank();
        w.open("modifier onlyAccessAdmin() {");
        if by_sc {
            w.line("require(msg.sender == registryOwner || msg.sender == accessController, \"caller cannot manage access\");");
        } else {
            w.line("require(msg.sender == registryOwner, \"caller cannot manage access\");");
        }
        w.line("_;");
        w.close("}");
        w.blank();
    }
    w.open("modifier recordExists(address record_id) {");
    w.line("require(owners[record_id] != address(0), \"unknown record\");");
    w.line("_;");
    w.close("}");
    if uses(RecordPolicy::Owner) {
        w.blank();
        w.open("modifier onlyRecordOwner(address record_id) {");
        w.line("require(msg.sender == owners[record_id], \"caller does not own the record\");");
        w.line("_;");
        w.close("}");
    }
    if uses(RecordPolicy::OwnerOrRegistryOwner) {
        w.blank();
        w.open("modifier onlyRecordOwnerOrRegistryOwner(address record_id) {");
        w.line("require(msg.sender == owners[record_id] || msg.sender == registryOwner, \"caller may not change the record\");");
        w.line("_;");
        w.close("}");
    }
    w.blank();
    w.open("constructor() public {");
    w.line("registryOwner = msg.sender;");
    w.close("}");
    w.blank();
    w.open("function authorizeProcess(address process) external onlyRegistryOwner {");
    w.line("processes[process] = true;");
    w.close("}");
    if fn_ac {
        w.blank();
        w.open("function grantAccess(address account) external onlyAccessAdmin {");
        w.line("granted[account] = true;");
        w.close("}");
        w.blank();
        w.open("function revokeAccess(address account) external onlyAccessAdmin {");
        w.line("granted[account] = false;");
        w.close("}");
    }
    if by_sc {
        w.blank();
        w.open("function setAccessController(address controller) external onlyRegistryOwner {");
        w.line("accessController = controller;");
        w.close("}");
    }

    // record_create
    let params: Vec<String> = spec.attributes.iter().map(|a| format!("{} {}", sol_type(a.ty, Loc::Calldata), a.name)).collect();
    let args: Vec<&str> = spec.attributes.iter().map(|a| a.name.as_str()).collect();
    let guard = match create {
        CreatePolicy::ProcessOnly => " onlyProcess",
        CreatePolicy::Granted => " onlyGranted",
        CreatePolicy::Anyone => "",
    };
    w.blank();
    w.open(format!(
        "function record_create(address owner, {}) external{guard} returns (address record_id) {{",
        params.join(", ")
    ));
    w.line("require(owner != address(0), \"zero owner\");");
    if distributed {
        w.line(format!("{record} rec = new {record}(owner, {});", args.join(", ")));
        w.line("record_id = address(rec);");
        w.line("recordList.push(record_id);");
    } else {
        w.line("record_id = address(uint160(uint256(keccak256(abi.encodePacked(address(this), recordCount)))));");
        w.line("require(owners[record_id] == address(0), \"duplicate record\");");
        w.line(format!("records[record_id] = Record({});", args.join(", ")));
    }
    w.line("recordCount += 1;");
    w.line("owners[record_id] = owner;");
    w.line("ownedCount[owner] += 1;");
    w.line("emit RecordCreated(record_id, owner);");
    w.line("emit Transfer(address(0), owner, uint256(uint160(record_id)));");
    w.close("}");
    w.blank();
    w.open("function record_get_owner(address record_id) external view recordExists(record_id) returns (address record_owner) {");
    w.line("return owners[record_id];");
    w.close("}");
    w.blank();
    let rets: Vec<String> = spec.attributes.iter().map(|a| format!("{} {}", sol_type(a.ty, Loc::Memory), a.name)).collect();
    w.open(format!(
        "function record_get_attrs(address record_id) external view recordExists(record_id) returns ({}) {{",
        rets.join(", ")
    ));
    if distributed {
        w.line(format!("return {record}(record_id).get_attrs();"));
    } else {
        w.line("Record storage r = records[record_id];");
        let fields: Vec<String> = spec.attributes.iter().map(|a| format!("r.{}", a.name)).collect();
        if fields.len() == 1 {
            w.line(format!("return {};", fields[0]));
        } else {
            w.line(format!("return ({});", fields.join(", ")));
        }
    }
    w.close("}");
    for a in &updatable {
        w.blank();
        w.open(format!(
            "function record_update_{0}(address record_id, {1} {0}) external recordExists(record_id) {2} {{",
            a.name,
            sol_type(a.ty, Loc::Calldata),
            policy_modifier(update)
        ));
        let mem = sol_type(a.ty, Loc::Memory);
        if distributed {
            w.line(format!("{record} rec = {record}(record_id);"));
            if a.history_tracked {
                w.line(format!("{mem} oldValue = rec.{}();", a.name));
            }
            w.line(format!("rec.set_{0}({0});", a.name));
        } else {
            w.line("Record storage r = records[record_id];");
            if a.history_tracked {
                w.line(format!("{mem} oldValue = r.{};", a.name));
            }
            w.line(format!("r.{0} = {0};", a.name));
        }
        if a.history_tracked {
            w.line(format!("emit {}(record_id, oldValue, {}, msg.sender);", change_event(&a.name), a.name));
        }
        w.close("}");
    }
    if let Some(p) = transfer {
        w.blank();
        w.open(format!(
            "function record_ownership_transfer(address record_id, address new_owner) external recordExists(record_id) {} {{",
            policy_modifier(p)
        ));
        w.line("_move(record_id, new_owner);");
        w.close("}");
    }

    // ERC-721 surface
    w.blank();
    w.open("function balanceOf(address owner) external view returns (uint256) {");
    w.line("return ownedCount[owner];");
    w.close("}");
    w.blank();
    w.open("function ownerOf(uint256 tokenId) external view returns (address) {");
    w.line("address owner = owners[address(uint160(tokenId))];");
    w.line("require(owner != address(0), \"unknown record\");");
    w.line("return owner;");
    w.close("}");
    w.blank();
    match transfer {
        None => {
            w.open("function transferFrom(address, address, uint256) external {");
            w.line("revert(\"ownership transfer is disabled\");");
            w.close("}");
        }
        Some(p) => {
            w.open("function transferFrom(address from, address to, uint256 tokenId) external {");
            w.line("address record_id = address(uint160(tokenId));");
            w.line("require(owners[record_id] != address(0), \"unknown record\");");
            w.line("require(owners[record_id] == from, \"sender does not own the record\");");
            match p {
                RecordPolicy::ProcessOnly => {
                    w.line("require(processes[msg.sender], \"caller is not an authorized process\");");
                }
                RecordPolicy::Owner => w.line(
                    "require(msg.sender == from || approvals[record_id] == msg.sender || operators[from][msg.sender], \"caller may not transfer the record\");",
                ),
                RecordPolicy::OwnerOrRegistryOwner => w.line(
                    "require(msg.sender == from || msg.sender == registryOwner || approvals[record_id] == msg.sender || operators[from][msg.sender], \"caller may not transfer the record\");",
                ),
            }
            w.line("_move(record_id, to);");
            w.close("}");
        }
    }
    w.blank();
    w.open("function approve(address to, uint256 tokenId) external {");
    w.line("address record_id = address(uint160(tokenId));");
    w.line("address owner = owners[record_id];");
    w.line("require(owner != address(0), \"unknown record\");");
    w.line("require(msg.sender == owner || operators[owner][msg.sender], \"caller may not approve\");");
    w.line("approvals[record_id] = to;");
    w.line("emit Approval(owner, to, tokenId);");
    w.close("}");
    w.blank();
    w.open("function getApproved(uint256 tokenId) external view returns (address) {");
    w.line("address record_id = address(uint160(tokenId));");
    w.line("require(owners[record_id] != address(0), \"unknown record\");");
    w.line("return approvals[record_id];");
    w.close("}");
    w.blank();
    w.open("function setApprovalForAll(address operator, bool approved) external {");
    w.line("operators[msg.sender][operator] = approved;");
    w.line("emit ApprovalForAll(msg.sender, operator, approved);");
    w.close("}");
    w.blank();
    w.open("function isApprovedForAll(address owner, address operator) external view returns (bool) {");
    w.line("return operators[owner][operator];");
    w.close("}");
    if transfer.is_some() {
        w.blank();
        w.open("function _move(address record_id, address to) internal {");
        w.line("require(to != address(0), \"zero owner\");");
        w.line("address from = owners[record_id];");
        w.line("ownedCount[from] -= 1;");
        w.line("ownedCount[to] += 1;");
        w.line("owners[record_id] = to;");
        w.line("approvals[record_id] = address(0);");
        if distributed {
            w.line(format!("{record}(record_id).setOwner(to);"));
        }
        w.line("emit Transfer(from, to, uint256(uint160(record_id)));");
        w.close("}");
    }
    w.close("}");
    contracts.push(w.finish());
    SourceUnit::new(format!("{name}.sol"), contracts)
}

fn record_contract(spec: &NonFungibleRegistrySpec, record: &str) -> String {
    let mut w = Writer::new();
    w.open(format!("contract {record} {{"));
    w.line("address public registry;");
    w.line("address public owner;");
    for a in &spec.attributes {
        w.line(format!("{} public {};", sol_type(a.ty, Loc::Stack), a.name));
    }
    w.blank();
    w.open("modifier onlyRegistry() {");
    w.line("require(msg.sender == registry, \"caller is not the registry\");");
    w.line("_;");
    w.close("}");
    w.blank();
    let params: Vec<String> = spec.attributes.iter().map(|a| format!("{} _{}", sol_type(a.ty, Loc::Memory), a.name)).collect();
    w.open(format!("constructor(address _owner, {}) public {{", params.join(", ")));
    w.line("registry = msg.sender;");
    w.line("owner = _owner;");
    for a in &spec.attributes {
        w.line(format!("{0} = _{0};", a.name));
    }
    w.close("}");
    w.blank();
    w.open("function setOwner(address newOwner) external onlyRegistry {");
    w.line("owner = newOwner;");
    w.close("}");
    for a in spec.attributes.iter().filter(|a| a.updatable) {
        w.blank();
        w.open(format!("function set_{0}({1} value) external onlyRegistry {{", a.name, sol_type(a.ty, Loc::Calldata)));
        w.line(format!("{} = value;", a.name));
        w.close("}");
    }
    w.blank();
    let rets: Vec<String> = spec.attributes.iter().map(|a| sol_type(a.ty, Loc::Memory)).collect();
    w.open(format!("function get_attrs() external view returns ({}) {{", rets.join(", ")));
    let names: Vec<&str> = spec.attributes.iter().map(|a| a.name.as_str()).collect();
    if names.len() == 1 {
        w.line(format!("return {};", names[0]));
    } else {
        w.line(format!("return ({});", names.join(", ")));
    }
    w.close("}");
    w.close("}");
    w.finish()
}
