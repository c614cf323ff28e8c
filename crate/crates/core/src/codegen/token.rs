use super::{address_literal, string_literal, SourceUnit, Writer};
use crate::registry::FungibleRegistrySpec;

pub fn gen_fungible(spec: &FungibleRegistrySpec) -> SourceUnit {
    let name = spec.contract_name();
    let mut w = Writer::new();
    w.open(format!("contract {name} {{"));
    w.line("event Transfer(address indexed from, address indexed to, uint256 value);");
    w.line("event Approval(address indexed owner, address indexed spender, uint256 value);");
    w.blank();
    w.line("mapping(address => uint256) private balances;");
    w.line("mapping(address => mapping(address => uint256)) private allowances;");
    w.line("uint256 private supply;");
    if spec.is_mintable {
        w.line("mapping(address => bool) private minters;");
    }
    if spec.is_burnable {
        w.line("mapping(address => bool) private burners;");
    }
    w.blank();
    w.open("constructor() public {");
    w.line(format!("supply = {};", spec.total_supply));
    for (a, amount) in &spec.initially_distributed_accounts {
        let a = address_literal(*a);
        w.line(format!("balances[{a}] = {amount};"));
        w.line(format!("emit Transfer(address(0), {a}, {amount});"));
    }
    for a in &spec.minter_addresses {
        w.line(format!("minters[{}] = true;", address_literal(*a)));
    }
    for a in &spec.burner_addresses {
        w.line(format!("burners[{}] = true;", address_literal(*a)));
    }
    w.close("}");
    w.blank();

    w.open("function name() external pure returns (string memory) {");
    w.line(format!("return {};", string_literal(&spec.name)));
    w.close("}");
    w.blank();
    w.open("function symbol() external pure returns (string memory) {");
    w.line(format!("return {};", string_literal(&spec.symbol)));
    w.close("}");
    w.blank();
    w.open("function decimals() external pure returns (uint8) {");
    w.line(format!("return {};", spec.decimals));
    w.close("}");
    w.blank();
    w.open("function totalSupply() external view returns (uint256) {");
    w.line("return supply;");
    w.close("}");
    w.blank();
    w.open("function balanceOf(address account) external view returns (uint256) {");
    w.line("return balances[account];");
    w.close("}");
    w.blank();
    w.open("function allowance(address owner, address spender) external view returns (uint256) {");
    w.line("return allowances[owner][spender];");
    w.close("}");
    w.blank();
    w.open("function transfer(address recipient, uint256 amount) external returns (bool) {");
    w.line("_transfer(msg.sender, recipient, amount);");
    w.line("return true;");
    w.close("}");
    w.blank();
    w.open("function approve(address spender, uint256 amount) external returns (bool) {");
    w.line("allowances[msg.sender][spender] = amount;");
    w.line("emit Approval(msg.sender, spender, amount);");
    w.line("return true;");
    w.close("}");
    w.blank();
    w.open("function transferFrom(address sender, address recipient, uint256 amount) external returns (bool) {");
    w.line("require(allowances[sender][msg.sender] >= amount, \"insufficient allowance\");");
    w.line("allowances[sender][msg.sender] -= amount;");
    w.line("_transfer(sender, recipient, amount);");
    w.line("return true;");
    w.close("}");
    if spec.is_mintable {
        w.blank();
        w.open("function mint(address account, uint256 amount) external returns (bool) {");
        w.line("require(minters[msg.sender], \"caller is not a minter\");");
        w.line("require(supply + amount >= supply, \"supply overflow\");");
        w.line("supply += amount;");
        w.line("balances[account] += amount;");
        w.line("emit Transfer(address(0), account, amount);");
        w.line("return true;");
        w.close("}");
    }
    if spec.is_burnable {
        w.blank();
        w.open("function burn(uint256 amount) external returns (bool) {");
        w.line("require(burners[msg.sender], \"caller is not a burner\");");
        w.line("require(balances[msg.sender] >= amount, \"insufficient balance\");");
        w.line("balances[msg.sender] -= amount;");
        w.line("supply -= amount;");
        w.line("emit Transfer(msg.sender, address(0), amount);");
        w.line("return true;");
        w.close("}");
    }
    w.blank();
    w.open("function _transfer(address from, address to, uint256 amount) internal {");
    w.line("require(balances[from] >= amount, \"insufficient balance\");");
    w.line("balances[from] -= amount;");
    w.line("balances[to] += amount;");
    w.line("emit Transfer(from, to, amount);");
    w.close("}");
    w.close("}");
    SourceUnit::new(format!("{name}.sol"), vec![w.finish()])
}
