package sfw.support;

public class Decoy4 {
    void wire4() {
        // context provider registry listener adapter context
        // provider registry listener adapter context provider
        // registry listener adapter context provider registry
        // listener adapter
    }
}
